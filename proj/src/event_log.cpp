#include "voxlab/event_log.hpp"

#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_map>

#include "voxlab/config.hpp"
#include "voxlab/errors.hpp"

namespace voxlab {

namespace fs = std::filesystem;

std::string format_event(const EvolutionEvent& e) {
    if (e.extra.find('\n') != std::string::npos) throw DomainError("event metadata must be a single line");
    char fit[40];
    std::snprintf(fit, sizeof fit, "%.17g", e.observed_fitness);
    std::string s;
    s += std::to_string(e.generation);
    s += ',';
    s += to_string(e.kind);
    s += ',';
    s += std::to_string(e.individual_id);
    s += ',';
    if (e.parent_id) s += std::to_string(*e.parent_id);
    s += ',';
    if (e.parent_lineage) s += std::to_string(*e.parent_lineage);
    s += ',';
    s += std::to_string(e.lineage_id);
    s += ',';
    s += std::to_string(e.age);
    s += ',';
    s += to_string(e.mutation_kind);
    s += ',';
    s += std::to_string(e.morphology_id.value);
    s += ',';
    s += fit;
    s += ',';
    s += e.extra;
    return s;
}

EvolutionEvent parse_event(const std::string& line) {
    std::vector<std::string> f;
    std::size_t pos = 0;
    while (f.size() < 10) {
        const auto comma = line.find(',', pos);
        if (comma == std::string::npos) throw IoError("event row has too few fields: '" + line + "'");
        f.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    f.push_back(line.substr(pos));
    EvolutionEvent e;
    try {
        e.generation = std::stoi(f[0]);
        e.kind = parse_event_kind(f[1]);
        e.individual_id = std::stoull(f[2]);
        if (!f[3].empty()) e.parent_id = std::stoull(f[3]);
        if (!f[4].empty()) e.parent_lineage = std::stoull(f[4]);
        e.lineage_id = std::stoull(f[5]);
        e.age = std::stoi(f[6]);
        e.mutation_kind = parse_mutation_kind(f[7]);
        e.morphology_id = MorphologyId{std::stoull(f[8])};
        e.observed_fitness = std::stod(f[9]);
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& ex) {
        throw IoError("bad event row '" + line + "': " + ex.what());
    }
    e.extra = f[10];
    return e;
}

std::uint64_t EventLog::config_hash() const {
    auto it = meta.find("config_hash");
    if (it == meta.end()) throw IoError("event log has no config_hash");
    return parse_hash_hex(it->second);
}

std::uint64_t EventLog::task_hash() const {
    auto it = meta.find("task_hash");
    if (it == meta.end()) throw IoError("event log has no task_hash");
    return parse_hash_hex(it->second);
}

std::string EventLog::algorithm() const {
    auto it = meta.find("algorithm");
    return it == meta.end() ? std::string() : it->second;
}

GridShape EventLog::grid() const {
    auto it = meta.find("grid");
    return it == meta.end() ? kGrid3x3 : parse_grid(it->second);
}

int EventLog::last_generation() const { return events.empty() ? -1 : events.back().generation; }

void write_event_log_header(std::ostream& out, const std::map<std::string, std::string>& meta) {
    for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
    out << kEventLogHeader << '\n';
}

EventLog read_event_log(std::istream& in) {
    EventLog log;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos) {
                std::string key = line.substr(1, eq - 1);
                key.erase(0, key.find_first_not_of(' '));
                log.meta[key] = line.substr(eq + 1);
            }
            continue;
        }
        if (!header) {
            if (line != kEventLogHeader) throw IoError("unexpected event log header '" + line + "'");
            header = true;
            continue;
        }
        log.events.push_back(parse_event(line));
    }
    if (!header) throw IoError("event log has no header row");
    return log;
}

EventLog read_event_log(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open event log " + path.string());
    return read_event_log(in);
}

EventLogWriter::EventLogWriter(const fs::path& path, const std::map<std::string, std::string>& meta) : path_(path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot create " + path.string());
    std::ostringstream head;
    write_event_log_header(head, meta);
    const auto text = head.str();
    out_ << text;
    offset_ = text.size();
}

EventLogWriter::EventLogWriter(const fs::path& path, std::uint64_t offset) : path_(path), offset_(offset) {
    truncate_file(path, offset);
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw IoError("cannot reopen " + path.string());
}

void EventLogWriter::write(std::span<const EvolutionEvent> events) {
    std::string buf;
    for (const auto& e : events) {
        buf += format_event(e);
        buf += '\n';
    }
    out_ << buf;
    if (!out_) throw IoError("failed writing " + path_.string());
    offset_ += buf.size();
}

void EventLogWriter::flush() {
    out_.flush();
    if (!out_) throw IoError("failed flushing " + path_.string());
}

void truncate_file(const fs::path& path, std::uint64_t offset) {
    std::error_code ec;
    const auto size = fs::file_size(path, ec);
    if (ec) throw IoError("cannot stat " + path.string() + ": " + ec.message());
    if (size < offset) throw IoError(path.string() + " is shorter than its checkpoint offset");
    fs::resize_file(path, offset, ec);
    if (ec) throw IoError("cannot truncate " + path.string() + ": " + ec.message());
}

MemberState member_state(const Individual& ind) {
    return {ind.id, ind.lineage_id, ind.age, encode(ind.morphology), ind.fitness.value_or(0.0)};
}

namespace {

MemberState state_of(const EvolutionEvent& e) {
    return {e.individual_id, e.lineage_id, e.age, e.morphology_id, e.observed_fitness};
}

[[noreturn]] void bad(int generation, const std::string& what) {
    throw DomainError("event log inconsistent at generation " + std::to_string(generation) + ": " + what);
}

// Groups events by generation, requiring non-decreasing generations that
// start at 0 with no gaps.
std::vector<std::vector<const EvolutionEvent*>> by_generation(const EventLog& log) {
    std::vector<std::vector<const EvolutionEvent*>> out;
    for (const auto& e : log.events) {
        if (e.generation < 0) bad(e.generation, "negative generation");
        const auto g = static_cast<std::size_t>(e.generation);
        if (g + 1 < out.size()) bad(e.generation, "rows out of generation order");
        if (g > out.size()) bad(e.generation, "missing generation");
        if (g == out.size()) out.emplace_back();
        out[g].push_back(&e);
    }
    return out;
}

void check_offspring(const EvolutionEvent& e, const MemberState& parent) {
    if (e.lineage_id != parent.lineage_id) bad(e.generation, "offspring lineage differs from its parent");
    if (!e.parent_lineage || *e.parent_lineage != parent.lineage_id) bad(e.generation, "parent lineage mismatch");
    if (e.age != parent.age + 1) bad(e.generation, "offspring age is not its parent's age + 1");
    const bool same_body = e.morphology_id == parent.morphology_id;
    if (e.mutation_kind == MutationKind::Body && same_body) bad(e.generation, "body mutation kept the morphology");
    if (e.mutation_kind == MutationKind::Brain && !same_body) bad(e.generation, "brain mutation changed the morphology");
    if (e.mutation_kind == MutationKind::None) bad(e.generation, "offspring without a mutation kind");
}

}  // namespace

std::vector<std::vector<MemberState>> replay_afpo(const EventLog& log) {
    std::vector<std::vector<MemberState>> out;
    std::vector<MemberState> population;
    for (const auto& rows : by_generation(log)) {
        const int g = static_cast<int>(out.size());
        std::unordered_map<std::uint64_t, MemberState> pool;
        std::vector<std::uint64_t> order;
        std::unordered_map<std::uint64_t, MemberState> previous;
        for (const auto& m : population) {
            auto aged = m;
            ++aged.age;
            previous.emplace(m.id, m);
            pool.emplace(m.id, aged);
            order.push_back(m.id);
        }
        std::set<std::uint64_t> judged;
        std::vector<MemberState> next;
        std::size_t injected = 0;
        for (const auto* e : rows) {
            switch (e->kind) {
                case EventKind::OffspringCreated: {
                    if (!e->parent_id) bad(g, "offspring without parent");
                    auto p = previous.find(*e->parent_id);
                    if (p == previous.end()) bad(g, "offspring parent is not in the population");
                    check_offspring(*e, p->second);
                    if (!pool.emplace(e->individual_id, state_of(*e)).second) bad(g, "duplicate individual id");
                    order.push_back(e->individual_id);
                    break;
                }
                case EventKind::Injected:
                    if (e->age != 0) bad(g, "injected individual with nonzero age");
                    if (!pool.emplace(e->individual_id, state_of(*e)).second) bad(g, "duplicate individual id");
                    order.push_back(e->individual_id);
                    ++injected;
                    break;
                case EventKind::Survived:
                case EventKind::Eliminated: {
                    auto it = pool.find(e->individual_id);
                    if (it == pool.end()) bad(g, "verdict for an unknown individual");
                    if (!(it->second == state_of(*e))) bad(g, "verdict row disagrees with the individual's state");
                    if (!judged.insert(e->individual_id).second) bad(g, "individual judged twice");
                    if (e->kind == EventKind::Survived) next.push_back(it->second);
                    break;
                }
                case EventKind::NicheReplaced:
                    bad(g, "niche_replaced row in an AFPO log");
            }
        }
        if (judged.size() != pool.size()) bad(g, "pool member without a survived/eliminated row");
        if (g > 0 && injected != 1) bad(g, "expected exactly one injection");
        if (g == 0 && !previous.empty()) bad(g, "generation 0 with a prior population");
        if (g > 0 && next.size() != population.size()) bad(g, "population size changed");
        // Survivors are listed in pool order.
        std::size_t k = 0;
        for (const auto id : order)
            if (k < next.size() && next[k].id == id) ++k;
        if (k != next.size()) bad(g, "survivors out of pool order");
        population = next;
        out.push_back(std::move(next));
    }
    return out;
}

std::vector<std::map<Niche, MemberState>> replay_map_elites(const EventLog& log) {
    const GridShape grid = log.grid();
    std::vector<std::map<Niche, MemberState>> out;
    std::map<Niche, MemberState> archive;
    for (const auto& rows : by_generation(log)) {
        const int g = static_cast<int>(out.size());
        std::unordered_map<std::uint64_t, MemberState> elites;
        for (const auto& [n, m] : archive) elites.emplace(m.id, m);
        std::unordered_map<std::uint64_t, MemberState> candidates;
        std::set<std::uint64_t> judged;
        for (const auto* e : rows) {
            switch (e->kind) {
                case EventKind::OffspringCreated: {
                    if (g == 0) bad(g, "offspring in the initial batch");
                    if (!e->parent_id) bad(g, "offspring without parent");
                    auto p = elites.find(*e->parent_id);
                    if (p == elites.end()) bad(g, "offspring parent is not an elite");
                    check_offspring(*e, p->second);
                    if (!candidates.emplace(e->individual_id, state_of(*e)).second) bad(g, "duplicate individual id");
                    break;
                }
                case EventKind::Injected:
                    if (g != 0) bad(g, "injection after the initial batch");
                    if (e->age != 0) bad(g, "injected individual with nonzero age");
                    if (!candidates.emplace(e->individual_id, state_of(*e)).second) bad(g, "duplicate individual id");
                    break;
                case EventKind::NicheReplaced:
                case EventKind::Eliminated: {
                    auto it = candidates.find(e->individual_id);
                    if (it == candidates.end()) bad(g, "verdict for an unknown candidate");
                    if (!(it->second == state_of(*e))) bad(g, "verdict row disagrees with the candidate's state");
                    if (!judged.insert(e->individual_id).second) bad(g, "candidate judged twice");
                    const Niche niche = niche_of(decode(e->morphology_id, grid));
                    auto inc = archive.find(niche);
                    if (e->kind == EventKind::NicheReplaced) {
                        const std::string expect =
                            inc == archive.end() ? "displaced=none" : "displaced=" + std::to_string(inc->second.id);
                        if (e->extra != expect) bad(g, "displaced incumbent mismatch");
                        if (inc != archive.end() && !(e->observed_fitness > inc->second.fitness))
                            bad(g, "replacement without strict improvement");
                        archive.insert_or_assign(niche, it->second);
                    } else {
                        if (inc == archive.end() || e->observed_fitness > inc->second.fitness)
                            bad(g, "candidate eliminated although it beats the niche");
                    }
                    break;
                }
                case EventKind::Survived:
                    bad(g, "survived row in a MAP-Elites log");
            }
        }
        if (judged.size() != candidates.size()) bad(g, "candidate without a verdict");
        out.push_back(archive);
    }
    return out;
}

}  // namespace voxlab
