#include "voxlab/mapping.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "voxlab/errors.hpp"
#include "voxlab/landscape_io.hpp"
#include "voxlab/parallel.hpp"

namespace voxlab {

namespace fs = std::filesystem;

MappingConfig MappingConfig::from(const ExperimentConfig& c) {
    MappingConfig m;
    m.grid = c.grid;
    m.budget = c.budget;
    m.task = c.task;
    m.search = c.evolution();
    m.search.workers = 1;
    m.seed_base = c.seed;
    m.range_begin = c.range_begin;
    m.range_end = c.range_end;
    m.chunk_size = c.chunk_size;
    m.workers = c.workers;
    return m;
}

std::uint64_t MappingConfig::hash() const {
    std::ostringstream s;
    char buf[40];
    auto d = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    s << "grid=" << to_string(grid) << "\nbudget=" << budget << "\nseed=" << seed_base
      << "\nchunk_size=" << effective_chunk_size() << "\npop_size=" << search.pop_size
      << "\nsigma=" << d(search.sigma) << "\ninit_stddev=" << d(search.init_stddev) << "\n"
      << canonical_text(task);
    return fnv1a64(s.str());
}

std::uint64_t default_chunk_size(GridShape grid) {
    const auto n = grid.id_count();
    return (n + 127) / 128;
}

std::uint64_t MappingConfig::effective_chunk_size() const {
    return chunk_size ? chunk_size : default_chunk_size(grid);
}

std::uint64_t MappingConfig::effective_end() const { return range_end ? range_end : grid.id_count(); }

Landscape map_range(const MappingConfig& config, std::uint64_t begin, std::uint64_t end,
                    std::vector<MorphologyTrace>* traces, std::uint64_t* evaluations) {
    std::vector<MorphologyId> ids;
    for (std::uint64_t v = begin; v < end; ++v) {
        const MorphologyId id{v};
        if (is_viable(decode(id, config.grid))) ids.push_back(id);
    }
    std::vector<ControllerSearchResult> results(ids.size());
    parallel_for(ids.size(), config.workers, [&](std::size_t i) {
        Rng rng(derive_seed(config.seed_base, ids[i].value));
        results[i] = controller_search(decode(ids[i], config.grid), config.budget, config.search, config.task, rng);
    });

    Landscape out(config.grid, task_hash(config.task));
    for (std::size_t i = 0; i < ids.size(); ++i) {
        LandscapeRecord r;
        r.id = ids[i];
        r.best_fitness = results[i].best_fitness;
        r.controller = results[i].best_controller;
        r.budget_generations = config.budget;
        r.source = RecordSource::Mapping;
        if (evaluations) *evaluations += results[i].evaluations;
        if (traces) traces->push_back({ids[i], std::move(results[i].trace)});
        out.put(std::move(r));
    }
    return out;
}

namespace {

std::string range_name(std::uint64_t b, std::uint64_t e) { return std::to_string(b) + "-" + std::to_string(e); }

fs::path chunk_path(const fs::path& dir, std::uint64_t b, std::uint64_t e) {
    return dir / "chunks" / (range_name(b, e) + ".bin");
}

fs::path chunk_traces_path(const fs::path& dir, std::uint64_t b, std::uint64_t e) {
    return dir / "chunks" / (range_name(b, e) + ".traces.csv");
}

std::vector<fs::path> manifests(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("manifest_", 0) == 0 && entry.path().extension() == ".txt") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

void write_traces_csv(std::ostream& out, const std::vector<MorphologyTrace>& traces, std::uint64_t config_hash) {
    out << "# config_hash=" << hash_hex(config_hash) << "\n";
    const std::size_t len = traces.empty() ? 0 : traces.front().best_fitness.size();
    out << "id";
    for (std::size_t g = 0; g < len; ++g) out << ",g" << g;
    out << "\n";
    char buf[40];
    for (const auto& t : traces) {
        if (t.best_fitness.size() != len) throw DomainError("traces of one chunk must have equal length");
        out << t.id.value;
        for (const double v : t.best_fitness) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ',' << buf;
        }
        out << "\n";
    }
}

std::vector<MorphologyTrace> read_traces_csv(std::istream& in) {
    std::vector<MorphologyTrace> out;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        MorphologyTrace t;
        bool first = true;
        while (std::getline(row, cell, ',')) {
            try {
                if (first)
                    t.id = MorphologyId{std::stoull(cell)};
                else
                    t.best_fitness.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IoError("bad traces row '" + line + "'");
            }
            first = false;
        }
        out.push_back(std::move(t));
    }
    return out;
}

MappingStats map_shard(const MappingConfig& config, const fs::path& dir, const MappingOptions& options) {
    config.task.validate();
    const std::uint64_t begin = config.range_begin;
    const std::uint64_t end = config.effective_end();
    if (end <= begin || end > config.grid.id_count()) throw DomainError("bad mapping id range");
    const std::uint64_t chunk = config.effective_chunk_size();
    const std::uint64_t hash = config.hash();

    fs::create_directories(dir / "chunks");
    const fs::path manifest_path = dir / ("manifest_" + range_name(begin, end) + ".txt");
    ShardManifest manifest = read_manifest(manifest_path);
    if (!manifest.completed.empty() && manifest.config_hash != hash)
        throw ConfigMismatch("mapping directory " + dir.string() + " was produced with a different configuration");
    manifest.config_hash = hash;

    MappingStats stats;
    for (std::uint64_t b = begin; b < end;) {
        const std::uint64_t e = std::min(end, (b / chunk + 1) * chunk);
        ++stats.chunks_total;
        if (manifest.contains(b, e) && fs::exists(chunk_path(dir, b, e))) {
            ++stats.chunks_skipped;
            b = e;
            continue;
        }
        if (options.stop_after_chunks && stats.chunks_computed >= *options.stop_after_chunks) return stats;

        std::vector<MorphologyTrace> traces;
        const Landscape part = map_range(config, b, e, &traces, &stats.evaluations);
        stats.morphologies_searched += part.size();
        std::ostringstream tbuf;
        write_traces_csv(tbuf, traces, hash);
        write_file_atomic(chunk_traces_path(dir, b, e), tbuf.str());
        save_landscape(chunk_path(dir, b, e), part);
        manifest.completed.emplace_back(b, e);
        write_manifest(manifest_path, manifest);
        ++stats.chunks_computed;
        if (options.progress)
            *options.progress << "chunk " << range_name(b, e) << ": " << part.size() << " morphologies\n";
        b = e;
    }

    const Landscape merged = collect_landscape(dir, config.grid, task_hash(config.task));
    save_landscape(dir / "landscape.bin", merged);
    stats.records = merged.size();
    stats.finished = true;
    return stats;
}

Landscape collect_landscape(const fs::path& dir, GridShape grid, std::uint64_t task_hash) {
    Landscape out(grid, task_hash);
    for (const auto& path : manifests(dir)) {
        for (const auto& [b, e] : read_manifest(path).completed) {
            const Landscape part = load_landscape(chunk_path(dir, b, e));
            merge_update(out, part);
        }
    }
    return out;
}

std::vector<MorphologyTrace> collect_traces(const fs::path& dir) {
    std::vector<MorphologyTrace> out;
    for (const auto& path : manifests(dir)) {
        for (const auto& [b, e] : read_manifest(path).completed) {
            std::ifstream in(chunk_traces_path(dir, b, e));
            if (!in) throw IoError("missing traces for chunk " + range_name(b, e));
            auto part = read_traces_csv(in);
            out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
}

}  // namespace voxlab
