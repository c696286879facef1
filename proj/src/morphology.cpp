#include "voxlab/morphology.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <stdexcept>

#include "voxlab/errors.hpp"

namespace voxlab {

namespace {

void check_shape(GridShape shape) {
    if (shape.rows < 1 || shape.cols < 1 || shape.cells() > kMaxCells)
        throw DomainError("unsupported grid shape " + to_string(shape));
}

}  // namespace

char voxel_char(VoxelType t) noexcept {
    switch (t) {
        case VoxelType::Empty: return '.';
        case VoxelType::SoftPassive: return 's';
        case VoxelType::RigidPassive: return 'r';
        case VoxelType::ActiveHorizontal: return 'H';
        case VoxelType::ActiveVertical: return 'V';
    }
    return '?';
}

std::uint64_t GridShape::id_count() const noexcept {
    std::uint64_t n = 1;
    for (int i = 0; i < cells(); ++i) n *= kVoxelTypeCount;
    return n;
}

GridShape parse_grid(const std::string& text) {
    const auto x = text.find_first_of("xX");
    if (x == std::string::npos) throw DomainError("grid must look like RxC, got '" + text + "'");
    GridShape shape;
    try {
        shape.rows = std::stoi(text.substr(0, x));
        shape.cols = std::stoi(text.substr(x + 1));
    } catch (const std::exception&) {
        throw DomainError("grid must look like RxC, got '" + text + "'");
    }
    check_shape(shape);
    return shape;
}

std::string to_string(GridShape shape) {
    return std::to_string(shape.rows) + "x" + std::to_string(shape.cols);
}

MorphologyGenome::MorphologyGenome(GridShape shape) : shape_(shape) {
    check_shape(shape);
}

MorphologyGenome::MorphologyGenome(GridShape shape, const std::vector<VoxelType>& cells)
    : MorphologyGenome(shape) {
    if (static_cast<int>(cells.size()) != shape.cells())
        throw DomainError("cell count does not match grid " + voxlab::to_string(shape));
    std::copy(cells.begin(), cells.end(), cells_.begin());
}

int MorphologyGenome::active_count() const noexcept {
    return static_cast<int>(std::count_if(cells_.begin(), cells_.begin() + size(), is_active));
}

int MorphologyGenome::passive_count() const noexcept {
    return static_cast<int>(std::count_if(cells_.begin(), cells_.begin() + size(), is_passive));
}

int MorphologyGenome::filled_count() const noexcept {
    return active_count() + passive_count();
}

std::string MorphologyGenome::to_string() const {
    std::string out;
    for (int r = 0; r < shape_.rows; ++r) {
        if (r) out += '/';
        for (int c = 0; c < shape_.cols; ++c) out += voxel_char(at(r, c));
    }
    return out;
}

bool operator==(const MorphologyGenome& a, const MorphologyGenome& b) noexcept {
    return a.shape_ == b.shape_ &&
           std::equal(a.cells_.begin(), a.cells_.begin() + a.size(), b.cells_.begin());
}

MorphologyId encode(const MorphologyGenome& genome) {
    std::uint64_t value = 0;
    for (int cell = genome.size() - 1; cell >= 0; --cell)
        value = value * kVoxelTypeCount + static_cast<std::uint64_t>(genome.at(cell));
    return MorphologyId{value};
}

MorphologyGenome decode(MorphologyId id, GridShape shape) {
    if (id.value >= shape.id_count())
        throw DomainError("morphology id " + std::to_string(id.value) + " out of range for grid " +
                          to_string(shape));
    MorphologyGenome genome(shape);
    std::uint64_t rest = id.value;
    for (int cell = 0; cell < shape.cells(); ++cell) {
        genome.set(cell, static_cast<VoxelType>(rest % kVoxelTypeCount));
        rest /= kVoxelTypeCount;
    }
    return genome;
}

bool is_viable(const MorphologyGenome& genome) {
    if (genome.active_count() < kMinActiveVoxels) return false;

    const GridShape shape = genome.shape();
    const int n = shape.cells();
    int start = -1;
    int filled = 0;
    for (int i = 0; i < n; ++i) {
        if (genome.at(i) != VoxelType::Empty) {
            if (start < 0) start = i;
            ++filled;
        }
    }
    if (filled == 0) return false;

    // Flood fill over edge-adjacent cells.
    std::array<int, kMaxCells> stack{};
    std::array<bool, kMaxCells> seen{};
    int top = 0;
    int reached = 0;
    stack[top++] = start;
    seen[static_cast<std::size_t>(start)] = true;
    while (top > 0) {
        const int cell = stack[--top];
        ++reached;
        const int r = cell / shape.cols;
        const int c = cell % shape.cols;
        const int nbrs[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
        for (const auto& rc : nbrs) {
            if (rc[0] < 0 || rc[0] >= shape.rows || rc[1] < 0 || rc[1] >= shape.cols) continue;
            const int next = rc[0] * shape.cols + rc[1];
            auto& mark = seen[static_cast<std::size_t>(next)];
            if (mark || genome.at(next) == VoxelType::Empty) continue;
            mark = true;
            stack[top++] = next;
        }
    }
    return reached == filled;
}

int hamming_distance(const MorphologyGenome& a, const MorphologyGenome& b) {
    if (a.shape() != b.shape()) throw DomainError("hamming distance across grid shapes");
    int d = 0;
    for (int i = 0; i < a.size(); ++i) d += a.at(i) != b.at(i);
    return d;
}

std::vector<MorphologyId> enumerate_viable(GridShape shape) {
    check_shape(shape);
    std::vector<MorphologyId> out;
    const std::uint64_t total = shape.id_count();
    MorphologyGenome genome(shape);
    for (std::uint64_t v = 0; v < total; ++v) {
        // Odometer increment instead of a full decode per id.
        if (v > 0) {
            for (int cell = 0; cell < shape.cells(); ++cell) {
                const auto next = static_cast<int>(genome.at(cell)) + 1;
                if (next < kVoxelTypeCount) {
                    genome.set(cell, static_cast<VoxelType>(next));
                    break;
                }
                genome.set(cell, VoxelType::Empty);
            }
        }
        if (is_viable(genome)) out.push_back(MorphologyId{v});
    }
    return out;
}

std::vector<MorphologyGenome> viable_neighbors(const MorphologyGenome& genome) {
    std::vector<MorphologyGenome> out;
    out.reserve(static_cast<std::size_t>(genome.size()) * (kVoxelTypeCount - 1));
    for (int cell = 0; cell < genome.size(); ++cell) {
        for (int v = 0; v < kVoxelTypeCount; ++v) {
            const auto t = static_cast<VoxelType>(v);
            if (t == genome.at(cell)) continue;
            MorphologyGenome candidate = genome;
            candidate.set(cell, t);
            if (is_viable(candidate)) out.push_back(candidate);
        }
    }
    return out;
}

MorphologyGenome mutate_morphology(const MorphologyGenome& genome, Rng& rng) {
    if (!is_viable(genome)) throw DomainError("cannot mutate non-viable genome " + genome.to_string());
    const auto choices = viable_neighbors(genome);
    assert(!choices.empty() && "every viable genome has a viable single-voxel mutant");
    std::uniform_int_distribution<std::size_t> pick(0, choices.size() - 1);
    return choices[pick(rng)];
}

MorphologyGenome random_viable_morphology(GridShape shape, Rng& rng) {
    std::uniform_int_distribution<std::uint64_t> pick(0, shape.id_count() - 1);
    for (;;) {
        MorphologyGenome genome = decode(MorphologyId{pick(rng)}, shape);
        if (is_viable(genome)) return genome;
    }
}

MorphologySpace::MorphologySpace(GridShape shape) : shape_(shape), ids_(enumerate_viable(shape)) {
    viable_.assign(shape.id_count(), 0);
    for (const auto id : ids_) viable_[id.value] = 1;
    viable_count_ = ids_.size();
}

std::vector<std::int32_t> MorphologySpace::bfs_distances(const std::vector<MorphologyId>& sources) const {
    std::vector<std::int32_t> dist(viable_.size(), -1);
    std::vector<std::uint64_t> frontier;
    for (const auto s : sources) {
        if (!viable(s)) throw DomainError("BFS source " + std::to_string(s.value) + " is not viable");
        if (dist[s.value] < 0) {
            dist[s.value] = 0;
            frontier.push_back(s.value);
        }
    }
    std::vector<std::uint64_t> next;
    for (std::int32_t level = 1; !frontier.empty(); ++level) {
        next.clear();
        for (const auto v : frontier) {
            for_each_neighbor(MorphologyId{v}, [&](MorphologyId n) {
                if (dist[n.value] < 0) {
                    dist[n.value] = level;
                    next.push_back(n.value);
                }
            });
        }
        frontier.swap(next);
    }
    return dist;
}

std::optional<int> graph_distance(const MorphologySpace& space, MorphologyId a, MorphologyId b) {
    if (!space.viable(a) || !space.viable(b))
        throw DomainError("graph_distance requires viable morphologies");
    if (a == b) return 0;

    // Single-pair BFS with early exit.
    std::vector<std::int32_t> dist(space.id_count(), -1);
    std::deque<std::uint64_t> queue{a.value};
    dist[a.value] = 0;
    while (!queue.empty()) {
        const auto v = queue.front();
        queue.pop_front();
        const auto d = dist[v];
        bool found = false;
        space.for_each_neighbor(MorphologyId{v}, [&](MorphologyId n) {
            if (dist[n.value] >= 0) return;
            dist[n.value] = d + 1;
            if (n == b) found = true;
            queue.push_back(n.value);
        });
        if (found) return d + 1;
    }
    return std::nullopt;
}

}  // namespace voxlab
