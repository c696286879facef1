#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "voxlab/evolution.hpp"

namespace voxlab {

// One CSV row per event after '#' metadata lines (config_hash, task_hash,
// algorithm, grid):
// generation,kind,individual_id,parent_id,parent_lineage,lineage_id,age,
// mutation_kind,morphology_id,observed_fitness,extra
// Missing parents are empty fields; fitness uses 17 significant digits so
// values round-trip exactly.
inline constexpr const char* kEventLogHeader =
    "generation,kind,individual_id,parent_id,parent_lineage,lineage_id,age,mutation_kind,morphology_id,"
    "observed_fitness,extra";

std::string format_event(const EvolutionEvent& event);
EvolutionEvent parse_event(const std::string& line);

struct EventLog {
    std::map<std::string, std::string> meta;
    std::vector<EvolutionEvent> events;

    std::uint64_t config_hash() const;
    std::uint64_t task_hash() const;
    std::string algorithm() const;
    GridShape grid() const;
    int last_generation() const;
};

void write_event_log_header(std::ostream& out, const std::map<std::string, std::string>& meta);
EventLog read_event_log(std::istream& in);
EventLog read_event_log(const std::filesystem::path& path);

// Append-only writer; tracks the byte offset for checkpoint truncation.
class EventLogWriter {
public:
    // Creates (truncating) the file and writes the metadata header.
    EventLogWriter(const std::filesystem::path& path, const std::map<std::string, std::string>& meta);
    // Reopens an existing log cut back to `offset` bytes.
    EventLogWriter(const std::filesystem::path& path, std::uint64_t offset);

    void write(std::span<const EvolutionEvent> events);
    void flush();
    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::uint64_t offset_ = 0;
};

// Resizes a file to `offset` bytes; throws IoError when it is shorter.
void truncate_file(const std::filesystem::path& path, std::uint64_t offset);

// Population member as visible in the log.
struct MemberState {
    std::uint64_t id = 0;
    std::uint64_t lineage_id = 0;
    int age = 0;
    MorphologyId morphology_id;
    double fitness = 0.0;

    friend bool operator==(const MemberState&, const MemberState&) = default;
};

MemberState member_state(const Individual& ind);

// AFPO: population after each generation (index = generation), rebuilt
// from the generation's survived rows and checked against the previous
// population, the generation's offspring and its injection. Throws
// DomainError on any inconsistency.
std::vector<std::vector<MemberState>> replay_afpo(const EventLog& log);

// MAP-Elites: archive after each generation, keyed by niche.
std::vector<std::map<Niche, MemberState>> replay_map_elites(const EventLog& log);

}  // namespace voxlab
