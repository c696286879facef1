#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "voxlab/landscape.hpp"

namespace voxlab {

// Little-endian binary layout:
//   "VXLNDSCP" magic, u32 version, u32 rows, u32 cols, u64 task hash,
//   u64 record count,
//   records (29 bytes each, ascending id):
//     u32 id, f64 fitness, u32 budget, u8 source, i32 updated generation
//     (-1 = none), u64 controller offset into the heap,
//   heap: per record, u64 parameter count (0 = no controller) + f64 values.
inline constexpr std::uint32_t kLandscapeFormatVersion = 1;

void write_landscape(std::ostream& out, const Landscape& landscape);
Landscape read_landscape(std::istream& in);

// Written to a temporary sibling and renamed into place.
void save_landscape(const std::filesystem::path& path, const Landscape& landscape);
Landscape load_landscape(const std::filesystem::path& path);

// id,fitness,active_count,passive_count,is_local_max preceded by '#'
// metadata rows. is_local_max is left empty when `maxima` is null.
void export_landscape_csv(std::ostream& out, const Landscape& landscape, const std::vector<MorphologyId>* maxima);

// Completed id ranges of a mapping directory, one "begin end" line each,
// under a "# config_hash=..." line.
struct ShardManifest {
    std::uint64_t config_hash = 0;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> completed;

    bool contains(std::uint64_t begin, std::uint64_t end) const;
};

ShardManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const ShardManifest& manifest);

// Writes `text` to path via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace voxlab
