#include "voxlab/landscape_io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "voxlab/binary_io.hpp"
#include "voxlab/config.hpp"
#include "voxlab/errors.hpp"

namespace voxlab {

namespace {

constexpr char kMagic[8] = {'V', 'X', 'L', 'N', 'D', 'S', 'C', 'P'};

}  // namespace

void write_landscape(std::ostream& out, const Landscape& landscape) {
    out.write(kMagic, sizeof kMagic);
    bin::put<std::uint32_t>(out, kLandscapeFormatVersion);
    bin::put<std::uint32_t>(out, static_cast<std::uint32_t>(landscape.grid().rows));
    bin::put<std::uint32_t>(out, static_cast<std::uint32_t>(landscape.grid().cols));
    bin::put<std::uint64_t>(out, landscape.task_hash());
    bin::put<std::uint64_t>(out, landscape.size());

    std::uint64_t offset = 0;
    for (const auto& [id, r] : landscape.records()) {
        bin::put<std::uint32_t>(out, static_cast<std::uint32_t>(id.value));
        bin::put<double>(out, r.best_fitness);
        bin::put<std::uint32_t>(out, static_cast<std::uint32_t>(r.budget_generations));
        bin::put<std::uint8_t>(out, static_cast<std::uint8_t>(r.source));
        bin::put<std::int32_t>(out, r.updated_at_generation.value_or(-1));
        bin::put<std::uint64_t>(out, offset);
        offset += 8 * (1 + r.controller.size());
    }
    for (const auto& [id, r] : landscape.records()) {
        bin::put<std::uint64_t>(out, r.controller.size());
        for (const double p : r.controller.params()) bin::put<double>(out, p);
    }
    if (!out) throw IoError("failed writing landscape");
}

Landscape read_landscape(std::istream& in) {
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw IoError("not a landscape file");
    const auto version = bin::get<std::uint32_t>(in);
    if (version != kLandscapeFormatVersion) throw IoError("unsupported landscape version " + std::to_string(version));
    GridShape grid;
    grid.rows = static_cast<int>(bin::get<std::uint32_t>(in));
    grid.cols = static_cast<int>(bin::get<std::uint32_t>(in));
    if (grid.rows < 1 || grid.cols < 1 || grid.cells() > kMaxCells) throw IoError("bad grid in landscape header");
    const auto hash = bin::get<std::uint64_t>(in);
    const auto count = bin::get<std::uint64_t>(in);
    if (count > grid.id_count()) throw IoError("landscape record count exceeds the id space");

    struct Row {
        LandscapeRecord record;
        std::uint64_t offset;
    };
    std::vector<Row> rows(count);
    for (auto& row : rows) {
        auto& r = row.record;
        r.id = MorphologyId{bin::get<std::uint32_t>(in)};
        r.best_fitness = bin::get<double>(in);
        r.budget_generations = static_cast<int>(bin::get<std::uint32_t>(in));
        const auto source = bin::get<std::uint8_t>(in);
        if (source > 1) throw IoError("bad record source");
        r.source = static_cast<RecordSource>(source);
        const auto gen = bin::get<std::int32_t>(in);
        if (gen >= 0) r.updated_at_generation = gen;
        row.offset = bin::get<std::uint64_t>(in);
    }
    const NetworkShape shape = NetworkShape::for_grid(grid);
    std::uint64_t offset = 0;
    Landscape out(grid, hash);
    for (auto& row : rows) {
        if (row.offset != offset) throw IoError("landscape controller heap is out of order");
        const auto n = bin::get<std::uint64_t>(in);
        if (n != 0 && n != shape.parameter_count()) throw IoError("landscape controller has the wrong size");
        std::vector<double> params(n);
        for (auto& p : params) p = bin::get<double>(in);
        if (n) row.record.controller = ControllerGenome(shape, std::move(params));
        offset += 8 * (1 + n);
        try {
            out.put(std::move(row.record));
        } catch (const DomainError& e) {
            throw IoError(std::string("bad landscape record: ") + e.what());
        }
    }
    return out;
}

void save_landscape(const std::filesystem::path& path, const Landscape& landscape) {
    std::ostringstream buf;
    write_landscape(buf, landscape);
    write_file_atomic(path, buf.str());
}

Landscape load_landscape(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open landscape " + path.string());
    return read_landscape(in);
}

void export_landscape_csv(std::ostream& out, const Landscape& landscape, const std::vector<MorphologyId>* maxima) {
    out << "# grid=" << to_string(landscape.grid()) << "\n";
    out << "# task_hash=" << hash_hex(landscape.task_hash()) << "\n";
    out << "# records=" << landscape.size() << "\n";
    out << "id,fitness,active_count,passive_count,is_local_max\n";
    std::size_t next = 0;
    char buf[40];
    for (const auto& [id, r] : landscape.records()) {
        const auto g = decode(id, landscape.grid());
        std::snprintf(buf, sizeof buf, "%.17g", r.best_fitness);
        out << id.value << ',' << buf << ',' << g.active_count() << ',' << g.passive_count() << ',';
        if (maxima) {
            while (next < maxima->size() && (*maxima)[next] < id) ++next;
            out << (next < maxima->size() && (*maxima)[next] == id ? 1 : 0);
        }
        out << '\n';
    }
}

bool ShardManifest::contains(std::uint64_t begin, std::uint64_t end) const {
    for (const auto& [b, e] : completed)
        if (b == begin && e == end) return true;
    return false;
}

ShardManifest read_manifest(const std::filesystem::path& path) {
    ShardManifest m;
    std::ifstream in(path);
    if (!in) return m;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("# config_hash=", 0) == 0) {
            m.config_hash = parse_hash_hex(line.substr(14));
            continue;
        }
        if (line[0] == '#') continue;
        std::istringstream row(line);
        std::uint64_t b = 0, e = 0;
        if (!(row >> b >> e) || e <= b) throw IoError("bad manifest line '" + line + "' in " + path.string());
        m.completed.emplace_back(b, e);
    }
    return m;
}

void write_manifest(const std::filesystem::path& path, const ShardManifest& manifest) {
    std::ostringstream out;
    out << "# config_hash=" << hash_hex(manifest.config_hash) << "\n";
    for (const auto& [b, e] : manifest.completed) out << b << ' ' << e << "\n";
    write_file_atomic(path, out.str());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.flush();
        if (!out) throw IoError("failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

}  // namespace voxlab
