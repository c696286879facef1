#include "voxlab/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "voxlab/errors.hpp"
#include "voxlab/rng.hpp"

namespace voxlab {

const char* to_string(ExperimentKind kind) noexcept {
    switch (kind) {
        case ExperimentKind::MapLandscape: return "map_landscape";
        case ExperimentKind::CooptAfpo: return "coopt_afpo";
        case ExperimentKind::CooptMapElites: return "coopt_mapelites";
        case ExperimentKind::MorphOnly: return "morph_only";
    }
    return "?";
}

ExperimentKind parse_experiment_kind(const std::string& text) {
    for (auto k : {ExperimentKind::MapLandscape, ExperimentKind::CooptAfpo, ExperimentKind::CooptMapElites,
                   ExperimentKind::MorphOnly})
        if (text == to_string(k)) return k;
    if (text == "afpo") return ExperimentKind::CooptAfpo;
    if (text == "map-elites" || text == "mapelites") return ExperimentKind::CooptMapElites;
    if (text == "morph-only") return ExperimentKind::MorphOnly;
    if (text == "map") return ExperimentKind::MapLandscape;
    throw DomainError("unknown experiment kind '" + text + "'");
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double to_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != value.size()) throw DomainError("'" + key + "' expects a number, got '" + value + "'");
    return out;
}

std::int64_t to_int(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    long long out = 0;
    try {
        out = std::stoll(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != value.size()) throw DomainError("'" + key + "' expects an integer, got '" + value + "'");
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    unsigned long long out = 0;
    try {
        out = std::stoull(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != value.size() || value.front() == '-')
        throw DomainError("'" + key + "' expects a non-negative integer, got '" + value + "'");
    return out;
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw DomainError("'" + key + "' expects true/false, got '" + value + "'");
}

void put_task(std::map<std::string, std::string>& kv, const TaskConfig& t) {
    kv["task.target_distance"] = fmt_double(t.target_distance);
    kv["task.episode_control_steps"] = std::to_string(t.episode_control_steps);
    kv["task.step_penalty"] = fmt_double(t.step_penalty);
    kv["task.settle_steps"] = std::to_string(t.settle_steps);
    const SimConfig& s = t.sim;
    kv["sim.dt"] = fmt_double(s.dt);
    kv["sim.control_period"] = std::to_string(s.control_period);
    kv["sim.gravity_x"] = fmt_double(s.gravity.x);
    kv["sim.gravity_y"] = fmt_double(s.gravity.y);
    kv["sim.ground_contact"] = s.ground_contact ? "true" : "false";
    kv["sim.ground_height"] = fmt_double(s.ground_height);
    kv["sim.contact_stiffness"] = fmt_double(s.contact_stiffness);
    kv["sim.contact_damping"] = fmt_double(s.contact_damping);
    kv["sim.friction_coefficient"] = fmt_double(s.friction_coefficient);
    kv["sim.stiffness_soft"] = fmt_double(s.stiffness_soft);
    kv["sim.stiffness_rigid"] = fmt_double(s.stiffness_rigid);
    kv["sim.stiffness_active"] = fmt_double(s.stiffness_active);
    kv["sim.spring_damping"] = fmt_double(s.spring_damping);
    kv["sim.voxel_size"] = fmt_double(s.voxel_size);
    kv["sim.point_mass"] = fmt_double(s.point_mass);
    kv["sim.max_velocity_clamp"] = fmt_double(s.max_velocity_clamp);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> m;
        auto dbl = [&m](const char* key, auto member) {
            m[key] = [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
                member(c) = to_double(k, v);
            };
        };
        auto integer = [&m](const char* key, auto member) {
            m[key] = [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
                member(c) = static_cast<int>(to_int(k, v));
            };
        };
        auto u64 = [&m](const char* key, auto member) {
            m[key] = [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
                member(c) = to_u64(k, v);
            };
        };
        m["kind"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.kind = parse_experiment_kind(v); };
        m["grid"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.grid = parse_grid(v); };
        u64("seed", [](ExperimentConfig& c) -> std::uint64_t& { return c.seed; });
        integer("generations", [](ExperimentConfig& c) -> int& { return c.generations; });
        integer("pop_size", [](ExperimentConfig& c) -> int& { return c.pop_size; });
        dbl("p_body", [](ExperimentConfig& c) -> double& { return c.p_body; });
        dbl("sigma", [](ExperimentConfig& c) -> double& { return c.sigma; });
        dbl("init_stddev", [](ExperimentConfig& c) -> double& { return c.init_stddev; });
        integer("batch_size", [](ExperimentConfig& c) -> int& { return c.batch_size; });
        integer("repetitions", [](ExperimentConfig& c) -> int& { return c.repetitions; });
        integer("checkpoint_every", [](ExperimentConfig& c) -> int& { return c.checkpoint_every; });
        integer("budget", [](ExperimentConfig& c) -> int& { return c.budget; });
        u64("range_begin", [](ExperimentConfig& c) -> std::uint64_t& { return c.range_begin; });
        u64("range_end", [](ExperimentConfig& c) -> std::uint64_t& { return c.range_end; });
        u64("chunk_size", [](ExperimentConfig& c) -> std::uint64_t& { return c.chunk_size; });
        integer("workers", [](ExperimentConfig& c) -> int& { return c.workers; });

        dbl("task.target_distance", [](ExperimentConfig& c) -> double& { return c.task.target_distance; });
        integer("task.episode_control_steps", [](ExperimentConfig& c) -> int& { return c.task.episode_control_steps; });
        dbl("task.step_penalty", [](ExperimentConfig& c) -> double& { return c.task.step_penalty; });
        integer("task.settle_steps", [](ExperimentConfig& c) -> int& { return c.task.settle_steps; });
        dbl("sim.dt", [](ExperimentConfig& c) -> double& { return c.task.sim.dt; });
        integer("sim.control_period", [](ExperimentConfig& c) -> int& { return c.task.sim.control_period; });
        dbl("sim.gravity_x", [](ExperimentConfig& c) -> double& { return c.task.sim.gravity.x; });
        dbl("sim.gravity_y", [](ExperimentConfig& c) -> double& { return c.task.sim.gravity.y; });
        m["sim.ground_contact"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.task.sim.ground_contact = to_bool(k, v);
        };
        dbl("sim.ground_height", [](ExperimentConfig& c) -> double& { return c.task.sim.ground_height; });
        dbl("sim.contact_stiffness", [](ExperimentConfig& c) -> double& { return c.task.sim.contact_stiffness; });
        dbl("sim.contact_damping", [](ExperimentConfig& c) -> double& { return c.task.sim.contact_damping; });
        dbl("sim.friction_coefficient", [](ExperimentConfig& c) -> double& { return c.task.sim.friction_coefficient; });
        dbl("sim.stiffness_soft", [](ExperimentConfig& c) -> double& { return c.task.sim.stiffness_soft; });
        dbl("sim.stiffness_rigid", [](ExperimentConfig& c) -> double& { return c.task.sim.stiffness_rigid; });
        dbl("sim.stiffness_active", [](ExperimentConfig& c) -> double& { return c.task.sim.stiffness_active; });
        dbl("sim.spring_damping", [](ExperimentConfig& c) -> double& { return c.task.sim.spring_damping; });
        dbl("sim.voxel_size", [](ExperimentConfig& c) -> double& { return c.task.sim.voxel_size; });
        dbl("sim.point_mass", [](ExperimentConfig& c) -> double& { return c.task.sim.point_mass; });
        dbl("sim.max_velocity_clamp", [](ExperimentConfig& c) -> double& { return c.task.sim.max_velocity_clamp; });
        return m;
    }();
    return table;
}

std::string join_lines(const std::map<std::string, std::string>& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults_for(ExperimentKind kind) {
    ExperimentConfig c;
    c.kind = kind;
    switch (kind) {
        case ExperimentKind::MapLandscape:
        case ExperimentKind::CooptAfpo:
        case ExperimentKind::CooptMapElites:
            break;
        case ExperimentKind::MorphOnly:
            c.pop_size = 10;
            c.generations = 1000;
            c.p_body = 1.0;
            break;
    }
    return c;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    const auto& table = setters();
    auto it = table.find(key);
    if (it == table.end()) throw DomainError("unknown config key '" + key + "'");
    it->second(*this, key, value);
}

void ExperimentConfig::validate() const {
    task.validate();
    if (grid.rows < 1 || grid.cols < 1 || grid.cells() > kMaxCells) throw DomainError("unsupported grid");
    if (generations < 0) throw DomainError("generations must be >= 0");
    if (pop_size < 1) throw DomainError("pop_size must be >= 1");
    if (!(p_body >= 0.0 && p_body <= 1.0)) throw DomainError("p_body must lie in [0, 1]");
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    if (!(init_stddev > 0.0)) throw DomainError("init_stddev must be positive");
    if (batch_size < 1) throw DomainError("batch_size must be >= 1");
    if (repetitions < 1) throw DomainError("repetitions must be >= 1");
    if (checkpoint_every < 1) throw DomainError("checkpoint_every must be >= 1");
    if (budget < 0) throw DomainError("budget must be >= 0");
    if (range_end != 0 && range_end <= range_begin) throw DomainError("empty id range");
    if (range_end > grid.id_count()) throw DomainError("id range exceeds the grid's id space");
    if (workers < 1) throw DomainError("workers must be >= 1");
}

std::string ExperimentConfig::canonical_text() const {
    std::map<std::string, std::string> kv;
    kv["kind"] = to_string(kind);
    kv["grid"] = to_string(grid);
    kv["seed"] = std::to_string(seed);
    kv["pop_size"] = std::to_string(pop_size);
    kv["sigma"] = fmt_double(sigma);
    kv["init_stddev"] = fmt_double(init_stddev);
    if (kind == ExperimentKind::MapLandscape) {
        kv["budget"] = std::to_string(budget);
        kv["range_begin"] = std::to_string(range_begin);
        kv["range_end"] = std::to_string(range_end);
        kv["chunk_size"] = std::to_string(chunk_size);
    } else {
        kv["generations"] = std::to_string(generations);
        kv["p_body"] = fmt_double(p_body);
        kv["checkpoint_every"] = std::to_string(checkpoint_every);
        if (kind == ExperimentKind::CooptMapElites) kv["batch_size"] = std::to_string(batch_size);
    }
    put_task(kv, task);
    return join_lines(kv);
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical_text()); }

EvolutionConfig ExperimentConfig::evolution() const {
    EvolutionConfig e;
    e.grid = grid;
    e.pop_size = pop_size;
    e.p_body = p_body;
    e.sigma = sigma;
    e.init_stddev = init_stddev;
    e.batch_size = batch_size;
    e.workers = workers;
    return e;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DomainError("config line " + std::to_string(lineno) + ": expected key=value");
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::optional<ExperimentKind> kind) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const auto kv = parse_key_values(buf.str());
    ExperimentKind k = kind.value_or(ExperimentKind::CooptAfpo);
    if (auto it = kv.find("kind"); it != kv.end()) k = parse_experiment_kind(it->second);
    ExperimentConfig c = ExperimentConfig::defaults_for(k);
    for (const auto& [key, value] : kv) c.set(key, value);
    return c;
}

std::string canonical_text(const TaskConfig& task) {
    std::map<std::string, std::string> kv;
    put_task(kv, task);
    return join_lines(kv);
}

std::uint64_t task_hash(const TaskConfig& task) { return fnv1a64(canonical_text(task)); }

std::string hash_hex(std::uint64_t hash) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, hash);
    return buf;
}

std::uint64_t parse_hash_hex(const std::string& text) {
    std::size_t pos = 0;
    std::uint64_t v = 0;
    try {
        v = std::stoull(text, &pos, 16);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != text.size()) throw IoError("bad hash '" + text + "'");
    return v;
}

}  // namespace voxlab
