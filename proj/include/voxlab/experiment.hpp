#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "voxlab/config.hpp"
#include "voxlab/evolution.hpp"
#include "voxlab/landscape.hpp"

namespace voxlab {

struct Champion {
    std::uint64_t individual_id = 0;
    std::uint64_t lineage_id = 0;
    int generation = 0;
    MorphologyId morphology_id;
    double fitness = 0.0;
    ControllerGenome controller;

    friend bool operator==(const Champion&, const Champion&) = default;
};

struct RunOptions {
    std::filesystem::path run_dir;
    // Fitness oracle for morph_only runs; for co-optimization runs, when
    // set, discoveries not above it are dropped to bound memory.
    const Landscape* landscape = nullptr;
    // Exit after this generation without a final checkpoint, as if killed.
    std::optional<int> stop_after_generation;
    bool resume = true;
    std::ostream* progress = nullptr;
    // Called after every generation (including 0) with the population
    // (AFPO) or archive (MAP-Elites).
    std::function<void(int, const std::vector<Individual>*, const Archive*, const GenerationResult&)> on_generation;
};

struct RunResult {
    Champion champion;
    int generations_completed = 0;
    bool finished = false;
    bool resumed = false;
    std::uint64_t evaluations = 0;
};

// Runs one coopt_afpo, coopt_mapelites or morph_only run into run_dir:
//   config.txt      canonical configuration
//   events.csv      event log
//   champions.csv   best-ever individual after each generation
//   discoveries.bin best observed fitness and controller per morphology
//                   (landscape format, co-optimization runs only)
//   checkpoint.bin  resumable state, every checkpoint_every generations
// map_landscape is handled by map_shard.
RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options);

// Seed of repetition `rep` of a campaign.
std::uint64_t repetition_seed(std::uint64_t seed, int rep);
std::string run_id(const ExperimentConfig& config, int rep);

inline constexpr const char* kChampionsHeader = "generation,individual_id,lineage_id,morphology_id,fitness,morphology";

struct ChampionRow {
    int generation = 0;
    std::uint64_t individual_id = 0;
    std::uint64_t lineage_id = 0;
    MorphologyId morphology_id;
    double fitness = 0.0;
};

std::vector<ChampionRow> read_champions_csv(const std::filesystem::path& path);

}  // namespace voxlab
