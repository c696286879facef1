#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "voxlab/config.hpp"
#include "voxlab/evaluation.hpp"
#include "voxlab/evolution.hpp"
#include "voxlab/landscape.hpp"

namespace voxlab {

struct MappingConfig {
    GridShape grid = kGrid3x3;
    int budget = 300;
    TaskConfig task;
    EvolutionConfig search;
    std::uint64_t seed_base = 1;
    // [range_begin, range_end) over the id space; range_end 0 = all ids.
    std::uint64_t range_begin = 0;
    std::uint64_t range_end = 0;
    std::uint64_t chunk_size = 0;
    int workers = 1;

    static MappingConfig from(const ExperimentConfig& config);

    // Covers everything that changes a record; the range is excluded so
    // that shards of one campaign share it.
    std::uint64_t hash() const;
    std::uint64_t effective_chunk_size() const;
    std::uint64_t effective_end() const;
};

// ceil(5^cells / 128).
std::uint64_t default_chunk_size(GridShape grid);

struct MorphologyTrace {
    MorphologyId id;
    std::vector<double> best_fitness;
};

// controller_search for every viable id in [begin, end), with the per-id
// stream seeded from derive_seed(seed_base, id).
Landscape map_range(const MappingConfig& config, std::uint64_t begin, std::uint64_t end,
                    std::vector<MorphologyTrace>* traces = nullptr, std::uint64_t* evaluations = nullptr);

struct MappingOptions {
    // Stop after this many newly computed chunks (simulated interruption).
    std::optional<std::size_t> stop_after_chunks;
    std::ostream* progress = nullptr;
};

struct MappingStats {
    std::size_t chunks_total = 0;
    std::size_t chunks_computed = 0;
    std::size_t chunks_skipped = 0;
    std::size_t morphologies_searched = 0;
    std::uint64_t evaluations = 0;
    // Records in the merged landscape.bin of the directory.
    std::size_t records = 0;
    bool finished = false;
};

// Resumable mapping into `dir`:
//   dir/chunks/<begin>-<end>.bin          landscape of one chunk
//   dir/chunks/<begin>-<end>.traces.csv   best-so-far trace per morphology
//   dir/manifest_<begin>-<end>.txt         completed chunks of this shard
//   dir/landscape.bin                      merge of every completed chunk
// Chunks already listed in the manifest are not recomputed.
MappingStats map_shard(const MappingConfig& config, const std::filesystem::path& dir, const MappingOptions& options = {});

// Merges every completed chunk listed by any manifest in `dir`.
Landscape collect_landscape(const std::filesystem::path& dir, GridShape grid, std::uint64_t task_hash);

// All traces of the completed chunks in `dir`, ascending id.
std::vector<MorphologyTrace> collect_traces(const std::filesystem::path& dir);

void write_traces_csv(std::ostream& out, const std::vector<MorphologyTrace>& traces, std::uint64_t config_hash);
std::vector<MorphologyTrace> read_traces_csv(std::istream& in);

}  // namespace voxlab
