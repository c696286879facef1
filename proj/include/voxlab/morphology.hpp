#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "voxlab/rng.hpp"

namespace voxlab {

enum class VoxelType : std::uint8_t {
    Empty = 0,
    SoftPassive = 1,
    RigidPassive = 2,
    ActiveHorizontal = 3,
    ActiveVertical = 4,
};

inline constexpr int kVoxelTypeCount = 5;

constexpr bool is_active(VoxelType t) noexcept {
    return t == VoxelType::ActiveHorizontal || t == VoxelType::ActiveVertical;
}
constexpr bool is_passive(VoxelType t) noexcept {
    return t == VoxelType::SoftPassive || t == VoxelType::RigidPassive;
}

char voxel_char(VoxelType t) noexcept;

struct GridShape {
    int rows = 3;
    int cols = 3;

    constexpr int cells() const noexcept { return rows * cols; }
    constexpr int corner_rows() const noexcept { return rows + 1; }
    constexpr int corner_cols() const noexcept { return cols + 1; }
    constexpr int corners() const noexcept { return corner_rows() * corner_cols(); }
    // Size of the id space, 5^cells.
    std::uint64_t id_count() const noexcept;

    friend constexpr bool operator==(const GridShape&, const GridShape&) = default;
};

inline constexpr GridShape kGrid3x3{3, 3};
inline constexpr GridShape kGrid2x2{2, 2};
inline constexpr int kMaxCells = 16;
inline constexpr int kMinActiveVoxels = 3;

// Parses "3x3" style strings.
GridShape parse_grid(const std::string& text);
std::string to_string(GridShape shape);

// Base-5 positional key of a genome; cell 0 is the least significant digit.
struct MorphologyId {
    std::uint64_t value = 0;

    friend constexpr auto operator<=>(const MorphologyId&, const MorphologyId&) = default;
};

// Row-major voxel grid (row 0 is the top row).
class MorphologyGenome {
public:
    explicit MorphologyGenome(GridShape shape = kGrid3x3);
    MorphologyGenome(GridShape shape, const std::vector<VoxelType>& cells);

    GridShape shape() const noexcept { return shape_; }
    int size() const noexcept { return shape_.cells(); }

    VoxelType at(int cell) const { return cells_[static_cast<std::size_t>(cell)]; }
    VoxelType at(int row, int col) const { return at(row * shape_.cols + col); }
    void set(int cell, VoxelType t) { cells_[static_cast<std::size_t>(cell)] = t; }
    void set(int row, int col, VoxelType t) { set(row * shape_.cols + col, t); }

    int active_count() const noexcept;
    int passive_count() const noexcept;
    int filled_count() const noexcept;

    // One character per cell, rows separated by '/': "HVs/.../..." style.
    std::string to_string() const;

    friend bool operator==(const MorphologyGenome& a, const MorphologyGenome& b) noexcept;

private:
    GridShape shape_;
    std::array<VoxelType, kMaxCells> cells_{};
};

MorphologyId encode(const MorphologyGenome& genome);
MorphologyGenome decode(MorphologyId id, GridShape shape);

// At least three active voxels and a non-empty, 4-connected body.
bool is_viable(const MorphologyGenome& genome);
int hamming_distance(const MorphologyGenome& a, const MorphologyGenome& b);

// Every viable id in ascending order.
std::vector<MorphologyId> enumerate_viable(GridShape shape);

// Viable single-cell changes, ordered by (cell, new value).
std::vector<MorphologyGenome> viable_neighbors(const MorphologyGenome& genome);

// Uniform over all viable single-voxel changes.
MorphologyGenome mutate_morphology(const MorphologyGenome& genome, Rng& rng);

// Uniform over viable genomes (rejection sampling over the id space).
MorphologyGenome random_viable_morphology(GridShape shape, Rng& rng);

// Dense viability table over the whole id space with graph queries on the
// implicit single-voxel-change graph.
class MorphologySpace {
public:
    explicit MorphologySpace(GridShape shape);

    GridShape shape() const noexcept { return shape_; }
    std::uint64_t id_count() const noexcept { return viable_.size(); }
    std::size_t viable_count() const noexcept { return viable_count_; }
    bool viable(MorphologyId id) const noexcept {
        return id.value < viable_.size() && viable_[id.value] != 0;
    }
    const std::vector<MorphologyId>& viable_ids() const noexcept { return ids_; }

    // Calls fn(MorphologyId) for each viable neighbor of a viable `id`,
    // in (cell, value) order.
    template <typename Fn>
    void for_each_neighbor(MorphologyId id, Fn&& fn) const {
        std::uint64_t place = 1;
        std::uint64_t rest = id.value;
        for (int cell = 0; cell < shape_.cells(); ++cell) {
            const auto digit = rest % kVoxelTypeCount;
            rest /= kVoxelTypeCount;
            const std::uint64_t base = id.value - digit * place;
            for (std::uint64_t v = 0; v < kVoxelTypeCount; ++v) {
                if (v == digit) continue;
                const std::uint64_t candidate = base + v * place;
                if (viable_[candidate]) fn(MorphologyId{candidate});
            }
            place *= kVoxelTypeCount;
        }
    }

    // Breadth-first distances from a set of sources; -1 marks unreachable
    // or non-viable ids. Indexed by id value.
    std::vector<std::int32_t> bfs_distances(const std::vector<MorphologyId>& sources) const;

private:
    GridShape shape_;
    std::vector<std::uint8_t> viable_;
    std::vector<MorphologyId> ids_;
    std::size_t viable_count_ = 0;
};

// Shortest path length in the viable graph; nullopt when unreachable.
// Throws DomainError for non-viable endpoints.
std::optional<int> graph_distance(const MorphologySpace& space, MorphologyId a, MorphologyId b);

}  // namespace voxlab

template <>
struct std::hash<voxlab::MorphologyId> {
    std::size_t operator()(const voxlab::MorphologyId& id) const noexcept {
        return std::hash<std::uint64_t>{}(id.value);
    }
};
