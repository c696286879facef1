#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "voxlab/controller.hpp"
#include "voxlab/morphology.hpp"

namespace voxlab {

enum class RecordSource : std::uint8_t { Mapping = 0, CooptUpdate = 1 };

const char* to_string(RecordSource source) noexcept;

struct LandscapeRecord {
    MorphologyId id;
    double best_fitness = 0.0;
    ControllerGenome controller;
    int budget_generations = 0;
    RecordSource source = RecordSource::Mapping;
    std::optional<int> updated_at_generation;

    friend bool operator==(const LandscapeRecord&, const LandscapeRecord&) = default;
};

// Best-known fitness per morphology of one grid under one task.
class Landscape {
public:
    Landscape() = default;
    Landscape(GridShape grid, std::uint64_t task_hash) : grid_(grid), task_hash_(task_hash) {}

    GridShape grid() const noexcept { return grid_; }
    std::uint64_t task_hash() const noexcept { return task_hash_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const std::map<MorphologyId, LandscapeRecord>& records() const noexcept { return records_; }

    const LandscapeRecord* find(MorphologyId id) const;
    std::optional<double> fitness(MorphologyId id) const;

    // Inserts or overwrites unconditionally. Throws DomainError for ids
    // outside the grid's space.
    void put(LandscapeRecord record);
    // Running max: stores `record` only if the id is new or the fitness is
    // strictly higher. Returns true when stored.
    bool offer(LandscapeRecord record);

    bool complete(const MorphologySpace& space) const;

    friend bool operator==(const Landscape&, const Landscape&) = default;

private:
    GridShape grid_ = kGrid3x3;
    std::uint64_t task_hash_ = 0;
    std::map<MorphologyId, LandscapeRecord> records_;
};

// Keeps the per-morphology maximum. Returns the number of records that were
// strictly improved (new ids are not counted). Throws ConfigMismatch when
// the task hashes or grids differ.
std::size_t merge_update(Landscape& landscape, const Landscape& discoveries);

// Dense fitness over a complete landscape, the input of all graph queries.
class LandscapeView {
public:
    // Throws DomainError unless every viable id has a record.
    LandscapeView(const MorphologySpace& space, const Landscape& landscape);
    // Synthetic fitness indexed by id value; entries of non-viable ids are ignored.
    LandscapeView(const MorphologySpace& space, std::vector<double> fitness_by_id);

    const MorphologySpace& space() const noexcept { return *space_; }
    double fitness(MorphologyId id) const { return fitness_[id.value]; }
    const std::vector<double>& dense() const noexcept { return fitness_; }

    MorphologyId global_max() const noexcept { return max_id_; }
    MorphologyId global_min() const noexcept { return min_id_; }
    double max_fitness() const { return fitness(max_id_); }
    double min_fitness() const { return fitness(min_id_); }

private:
    void scan();

    const MorphologySpace* space_;
    std::vector<double> fitness_;
    MorphologyId max_id_;
    MorphologyId min_id_;
};

// Ids with no strictly fitter viable neighbor, ascending.
std::vector<MorphologyId> local_maxima(const LandscapeView& view);
bool is_local_max(const LandscapeView& view, MorphologyId id);

struct BasinResult {
    MorphologyId peak;
    int steps = 0;
};

// Steepest ascent to a local maximum; ties between equally fit best
// neighbors go to the lowest id.
BasinResult hill_climb_basin(MorphologyId start, const LandscapeView& view);

struct NearOptimalityConfig {
    double fraction = 0.15;
};

// (max - min) * (1 - fraction) + min, with fraction <= 0 giving max and
// fraction >= 1 giving min exactly.
double near_optimal_threshold(double global_max, double global_min, double fraction);
double near_optimal_threshold(const LandscapeView& view, NearOptimalityConfig config);

std::vector<MorphologyId> near_optimal_set(const LandscapeView& view, NearOptimalityConfig config);

enum class DistanceMetric { Graph, Hamming };

struct RuggednessStats {
    double mean_to_local_max = 0.0;
    double mean_to_global_max = 0.0;
    double mean_to_near_optimal_local_max = 0.0;
    std::size_t local_max_count = 0;
    std::size_t near_optimal_local_max_count = 0;
    std::size_t morphologies = 0;
    // Morphologies with no path to the relevant set; excluded from the means.
    std::size_t unreachable = 0;
    double threshold = 0.0;
    MorphologyId global_max;
};

RuggednessStats ruggedness_stats(const LandscapeView& view, NearOptimalityConfig config,
                                 DistanceMetric metric = DistanceMetric::Graph);

// Distance from every viable id to the nearest member of `targets`, indexed
// by id value; -1 for unreachable or non-viable ids.
std::vector<std::int32_t> distance_to_set(const MorphologySpace& space, const std::vector<MorphologyId>& targets,
                                          DistanceMetric metric);

}  // namespace voxlab
