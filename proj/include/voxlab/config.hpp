#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "voxlab/evaluation.hpp"
#include "voxlab/evolution.hpp"
#include "voxlab/morphology.hpp"

namespace voxlab {

enum class ExperimentKind { MapLandscape, CooptAfpo, CooptMapElites, MorphOnly };

const char* to_string(ExperimentKind kind) noexcept;
ExperimentKind parse_experiment_kind(const std::string& text);

// Flat key=value settings. Everything that can change a result is part of
// canonical_text(); worker count and output paths are not.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::CooptAfpo;
    GridShape grid = kGrid3x3;
    std::uint64_t seed = 1;
    int generations = 10000;
    int pop_size = 20;
    double p_body = 0.5;
    double sigma = 0.1;
    double init_stddev = 0.1;
    int batch_size = 20;
    int repetitions = 1;
    int checkpoint_every = 100;
    // Controller-search generations per morphology when mapping.
    int budget = 300;
    // Mapping shard: ids in [range_begin, range_end); range_end 0 = whole space.
    std::uint64_t range_begin = 0;
    std::uint64_t range_end = 0;
    // Ids per mapping chunk; 0 = ceil(5^cells / 128).
    std::uint64_t chunk_size = 0;
    TaskConfig task;

    // Run-time only.
    int workers = 1;

    static ExperimentConfig defaults_for(ExperimentKind kind);

    // Throws DomainError on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
    void validate() const;

    // Sorted key=value lines.
    std::string canonical_text() const;
    std::uint64_t hash() const;

    EvolutionConfig evolution() const;
};

// Parses "key = value" lines; '#' starts a comment.
std::map<std::string, std::string> parse_key_values(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path, std::optional<ExperimentKind> kind = std::nullopt);

std::string canonical_text(const TaskConfig& task);
// Stamps landscapes: fitnesses are comparable only under equal task hashes.
std::uint64_t task_hash(const TaskConfig& task);

std::string hash_hex(std::uint64_t hash);
std::uint64_t parse_hash_hex(const std::string& text);

}  // namespace voxlab
