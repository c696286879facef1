#include "voxlab/experiment.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

#include "voxlab/binary_io.hpp"
#include "voxlab/errors.hpp"
#include "voxlab/event_log.hpp"
#include "voxlab/landscape_io.hpp"

namespace voxlab {

namespace fs = std::filesystem;

std::uint64_t repetition_seed(std::uint64_t seed, int rep) {
    return derive_seed(seed, 0x5245500000000000ULL + static_cast<std::uint64_t>(rep));
}

std::string run_id(const ExperimentConfig& config, int rep) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s-s%llu-r%03d", to_string(config.kind),
                  static_cast<unsigned long long>(config.seed), rep);
    return buf;
}

namespace {

constexpr char kCheckpointMagic[8] = {'V', 'X', 'C', 'K', 'P', 'T', '0', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_controller(std::ostream& out, const ControllerGenome& c) {
    bin::put<std::uint64_t>(out, c.size());
    for (const double p : c.params()) bin::put<double>(out, p);
}

ControllerGenome get_controller(std::istream& in, NetworkShape shape) {
    const auto n = bin::get<std::uint64_t>(in);
    if (n == 0) return {};
    if (n != shape.parameter_count()) throw IoError("checkpoint controller has the wrong size");
    std::vector<double> params(n);
    for (auto& p : params) p = bin::get<double>(in);
    return ControllerGenome(shape, std::move(params));
}

void put_individual(std::ostream& out, const Individual& ind) {
    bin::put<std::uint64_t>(out, ind.id);
    bin::put<std::uint64_t>(out, ind.lineage_id);
    bin::put<std::int32_t>(out, ind.age);
    bin::put<std::uint8_t>(out, ind.fitness ? 1 : 0);
    bin::put<double>(out, ind.fitness.value_or(0.0));
    bin::put<std::uint64_t>(out, encode(ind.morphology).value);
    put_controller(out, ind.controller);
}

Individual get_individual(std::istream& in, GridShape grid) {
    Individual ind;
    ind.id = bin::get<std::uint64_t>(in);
    ind.lineage_id = bin::get<std::uint64_t>(in);
    ind.age = bin::get<std::int32_t>(in);
    const bool has = bin::get<std::uint8_t>(in) != 0;
    const double f = bin::get<double>(in);
    if (has) ind.fitness = f;
    const auto morph = bin::get<std::uint64_t>(in);
    if (morph >= grid.id_count()) throw IoError("checkpoint morphology id out of range");
    ind.morphology = decode(MorphologyId{morph}, grid);
    ind.controller = get_controller(in, NetworkShape::for_grid(grid));
    return ind;
}

struct RunState {
    int generation = -1;
    Rng rng;
    IdCounters ids;
    std::vector<Individual> population;
    Archive archive;
    std::optional<Champion> champion;
    Landscape discoveries;
    std::uint64_t evaluations = 0;
    std::uint64_t events_offset = 0;
    std::uint64_t champions_offset = 0;
};

void save_checkpoint(const fs::path& path, std::uint64_t hash, const RunState& s) {
    std::ostringstream out;
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    bin::put<std::uint32_t>(out, kCheckpointVersion);
    bin::put<std::uint64_t>(out, hash);
    bin::put<std::int32_t>(out, s.generation);
    bin::put_string(out, rng_state(s.rng));
    bin::put<std::uint64_t>(out, s.ids.next_individual);
    bin::put<std::uint64_t>(out, s.ids.next_lineage);
    bin::put<std::uint64_t>(out, s.evaluations);
    bin::put<std::uint64_t>(out, s.events_offset);
    bin::put<std::uint64_t>(out, s.champions_offset);
    bin::put<std::uint8_t>(out, s.champion ? 1 : 0);
    if (s.champion) {
        const Champion& c = *s.champion;
        bin::put<std::uint64_t>(out, c.individual_id);
        bin::put<std::uint64_t>(out, c.lineage_id);
        bin::put<std::int32_t>(out, c.generation);
        bin::put<std::uint64_t>(out, c.morphology_id.value);
        bin::put<double>(out, c.fitness);
        put_controller(out, c.controller);
    }
    bin::put<std::uint64_t>(out, s.population.size());
    for (const auto& ind : s.population) put_individual(out, ind);
    bin::put<std::uint64_t>(out, s.archive.size());
    for (const auto& [niche, ind] : s.archive) put_individual(out, ind);
    std::ostringstream disc;
    write_landscape(disc, s.discoveries);
    bin::put_string(out, disc.str());
    write_file_atomic(path, out.str());
}

void load_checkpoint(const fs::path& path, std::uint64_t hash, GridShape grid, RunState& s) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) throw IoError("not a checkpoint file");
    if (bin::get<std::uint32_t>(in) != kCheckpointVersion) throw IoError("unsupported checkpoint version");
    if (bin::get<std::uint64_t>(in) != hash)
        throw ConfigMismatch("checkpoint " + path.string() + " belongs to a different configuration");
    s.generation = bin::get<std::int32_t>(in);
    restore_rng_state(s.rng, bin::get_string(in));
    s.ids.next_individual = bin::get<std::uint64_t>(in);
    s.ids.next_lineage = bin::get<std::uint64_t>(in);
    s.evaluations = bin::get<std::uint64_t>(in);
    s.events_offset = bin::get<std::uint64_t>(in);
    s.champions_offset = bin::get<std::uint64_t>(in);
    if (bin::get<std::uint8_t>(in)) {
        Champion c;
        c.individual_id = bin::get<std::uint64_t>(in);
        c.lineage_id = bin::get<std::uint64_t>(in);
        c.generation = bin::get<std::int32_t>(in);
        c.morphology_id = MorphologyId{bin::get<std::uint64_t>(in)};
        c.fitness = bin::get<double>(in);
        c.controller = get_controller(in, NetworkShape::for_grid(grid));
        s.champion = std::move(c);
    }
    const auto pop = bin::get<std::uint64_t>(in);
    s.population.clear();
    for (std::uint64_t i = 0; i < pop; ++i) s.population.push_back(get_individual(in, grid));
    const auto arc = bin::get<std::uint64_t>(in);
    s.archive.clear();
    for (std::uint64_t i = 0; i < arc; ++i) {
        auto ind = get_individual(in, grid);
        s.archive.insert_or_assign(niche_of(ind.morphology), std::move(ind));
    }
    std::istringstream disc(bin::get_string(in, std::uint64_t{1} << 40));
    s.discoveries = read_landscape(disc);
}

std::string champion_row(int generation, const Champion& c, GridShape grid) {
    char fit[40];
    std::snprintf(fit, sizeof fit, "%.17g", c.fitness);
    return std::to_string(generation) + "," + std::to_string(c.individual_id) + "," + std::to_string(c.lineage_id) +
           "," + std::to_string(c.morphology_id.value) + "," + fit + "," + decode(c.morphology_id, grid).to_string() +
           "\n";
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    config.validate();
    if (config.kind == ExperimentKind::MapLandscape) throw DomainError("map_landscape runs go through map_shard");
    const bool morph_only = config.kind == ExperimentKind::MorphOnly;
    const bool elites = config.kind == ExperimentKind::CooptMapElites;
    const std::uint64_t hash = config.hash();
    const std::uint64_t thash = task_hash(config.task);

    if (options.landscape) {
        if (!(options.landscape->grid() == config.grid))
            throw ConfigMismatch("landscape grid does not match the run configuration");
        if (options.landscape->task_hash() != thash)
            throw ConfigMismatch("landscape was computed under a different task configuration");
    }
    std::unique_ptr<FitnessEvaluator> evaluator;
    if (morph_only) {
        if (!options.landscape) throw DomainError("morph_only runs need a landscape as fitness oracle");
        const Landscape* land = options.landscape;
        evaluator = std::make_unique<OracleEvaluator>([land](MorphologyId id) { return land->fitness(id); });
    } else {
        evaluator = std::make_unique<PhysicsEvaluator>(config.task);
    }

    EvolutionConfig evo = config.evolution();
    const Afpo afpo(morph_only ? AfpoMode::MorphologyOnly : AfpoMode::BrainBody, evo, *evaluator);
    const MapElites map_elites(evo, *evaluator);

    const fs::path dir = options.run_dir;
    fs::create_directories(dir);
    write_file_atomic(dir / "config.txt", config.canonical_text());
    const fs::path events_path = dir / "events.csv";
    const fs::path champions_path = dir / "champions.csv";
    const fs::path checkpoint_path = dir / "checkpoint.bin";

    RunState s;
    s.rng.seed(config.seed);
    s.discoveries = Landscape(config.grid, thash);
    RunResult result;
    std::optional<EventLogWriter> events;
    std::ofstream champions;

    if (options.resume && fs::exists(checkpoint_path)) {
        load_checkpoint(checkpoint_path, hash, config.grid, s);
        events.emplace(events_path, s.events_offset);
        truncate_file(champions_path, s.champions_offset);
        champions.open(champions_path, std::ios::binary | std::ios::app);
        result.resumed = true;
    } else {
        std::map<std::string, std::string> meta{{"config_hash", hash_hex(hash)},
                                                {"task_hash", hash_hex(thash)},
                                                {"algorithm", elites ? "map_elites" : "afpo"},
                                                {"grid", to_string(config.grid)},
                                                {"kind", to_string(config.kind)}};
        events.emplace(events_path, meta);
        champions.open(champions_path, std::ios::binary | std::ios::trunc);
        const std::string head = "# config_hash=" + hash_hex(hash) + "\n" + kChampionsHeader + "\n";
        champions << head;
        s.champions_offset = head.size();
    }
    if (!champions) throw IoError("cannot open " + champions_path.string());

    auto finish = [&](bool finished) {
        result.finished = finished;
        result.generations_completed = s.generation;
        result.evaluations = s.evaluations;
        if (s.champion) result.champion = *s.champion;
        return result;
    };

    for (int g = s.generation + 1; g <= config.generations; ++g) {
        GenerationResult gen;
        if (elites)
            gen = g == 0 ? map_elites.initialize(s.rng, s.ids, s.archive)
                         : map_elites.generation(g, s.rng, s.ids, s.archive);
        else
            gen = g == 0 ? afpo.initialize(s.rng, s.ids, s.population) : afpo.generation(g, s.rng, s.ids, s.population);
        s.generation = g;
        s.evaluations += gen.evaluated.size();

        for (const auto& ind : gen.evaluated) {
            if (!s.champion || *ind.fitness > s.champion->fitness)
                s.champion = Champion{ind.id, ind.lineage_id, g, encode(ind.morphology), *ind.fitness, ind.controller};
            if (morph_only) continue;
            const MorphologyId id = encode(ind.morphology);
            if (options.landscape) {
                const auto known = options.landscape->fitness(id);
                if (known && !(*ind.fitness > *known)) continue;
            }
            s.discoveries.offer(LandscapeRecord{id, *ind.fitness, ind.controller, 0, RecordSource::CooptUpdate, g});
        }

        events->write(gen.events);
        const std::string row = champion_row(g, *s.champion, config.grid);
        champions << row;
        if (!champions) throw IoError("failed writing " + champions_path.string());
        s.champions_offset += row.size();
        s.events_offset = events->offset();

        if (options.on_generation) options.on_generation(g, elites ? nullptr : &s.population, elites ? &s.archive : nullptr, gen);

        if (g % config.checkpoint_every == 0 || g == config.generations) {
            events->flush();
            champions.flush();
            if (!morph_only) save_landscape(dir / "discoveries.bin", s.discoveries);
            save_checkpoint(checkpoint_path, hash, s);
            if (options.progress)
                *options.progress << "generation " << g << " champion " << s.champion->fitness << "\n";
        }
        if (options.stop_after_generation && g == *options.stop_after_generation && g < config.generations) {
            events->flush();
            champions.flush();
            return finish(false);
        }
    }
    events->flush();
    champions.flush();
    return finish(true);
}

std::vector<ChampionRow> read_champions_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<ChampionRow> out;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != kChampionsHeader) throw IoError("unexpected champions header in " + path.string());
            header = true;
            continue;
        }
        std::istringstream row(line);
        std::string f[6];
        for (auto& cell : f) std::getline(row, cell, ',');
        ChampionRow r;
        try {
            r.generation = std::stoi(f[0]);
            r.individual_id = std::stoull(f[1]);
            r.lineage_id = std::stoull(f[2]);
            r.morphology_id = MorphologyId{std::stoull(f[3])};
            r.fitness = std::stod(f[4]);
        } catch (const std::exception&) {
            throw IoError("bad champions row '" + line + "'");
        }
        out.push_back(r);
    }
    return out;
}

}  // namespace voxlab
