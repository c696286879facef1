#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "voxlab/config.hpp"
#include "voxlab/errors.hpp"
#include "voxlab/event_log.hpp"
#include "voxlab/experiment.hpp"
#include "voxlab/landscape.hpp"
#include "voxlab/landscape_io.hpp"

using namespace voxlab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("voxlab_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ExperimentConfig quick(ExperimentKind kind, int generations) {
    ExperimentConfig c = ExperimentConfig::defaults_for(kind);
    c.grid = kGrid2x2;
    c.generations = generations;
    c.seed = 5;
    c.task.episode_control_steps = 8;
    c.task.settle_steps = 30;
    c.checkpoint_every = 4;
    return c;
}

Landscape synthetic(GridShape grid, std::uint64_t thash) {
    Landscape l(grid, thash);
    for (const auto id : enumerate_viable(grid))
        l.put(LandscapeRecord{id, static_cast<double>(mix64(id.value) % 1000) / 100.0, {}, 0, RecordSource::Mapping, {}});
    return l;
}

}  // namespace

TEST_CASE("event rows round-trip") {
    EvolutionEvent e;
    e.generation = 12;
    e.kind = EventKind::NicheReplaced;
    e.individual_id = 99;
    e.parent_id = 7;
    e.parent_lineage = 3;
    e.lineage_id = 3;
    e.age = 4;
    e.mutation_kind = MutationKind::Brain;
    e.morphology_id = MorphologyId{123456};
    e.observed_fitness = -5.1234567890123456;
    e.extra = "displaced=42,odd";
    const std::string line = format_event(e);
    CHECK(line == "12,niche_replaced,99,7,3,3,4,brain,123456,-5.1234567890123452,displaced=42,odd");
    CHECK(parse_event(line) == e);

    EvolutionEvent f;
    f.kind = EventKind::Injected;
    f.observed_fitness = 0.1;
    CHECK(format_event(f) == "0,injected,0,,,0,0,none,0,0.10000000000000001,");
    CHECK(parse_event(format_event(f)) == f);
    CHECK_THROWS_AS(parse_event("1,survived,2"), IoError);
    CHECK_THROWS_AS(parse_event("x,survived,2,,,0,0,none,0,0,"), IoError);
}

TEST_CASE("afpo replay reproduces the population of every generation") {
    const fs::path dir = fresh_dir("replay_afpo");
    ExperimentConfig c = quick(ExperimentKind::CooptAfpo, 12);
    std::vector<std::vector<MemberState>> truth;
    RunOptions opt;
    opt.run_dir = dir;
    opt.on_generation = [&](int g, const std::vector<Individual>* pop, const Archive*, const GenerationResult&) {
        REQUIRE(pop != nullptr);
        CHECK(static_cast<int>(truth.size()) == g);
        std::vector<MemberState> s;
        for (const auto& ind : *pop) s.push_back(member_state(ind));
        truth.push_back(s);
    };
    const RunResult r = run_experiment(c, opt);
    CHECK(r.finished);
    CHECK(r.evaluations == 20 + 12 * 21);

    const EventLog log = read_event_log(dir / "events.csv");
    CHECK(log.config_hash() == c.hash());
    CHECK(log.task_hash() == task_hash(c.task));
    CHECK(log.algorithm() == "afpo");
    CHECK(log.grid() == kGrid2x2);
    CHECK(log.last_generation() == 12);
    CHECK(log.events.size() == 40 + 12 * (21 + 41));
    const auto replay = replay_afpo(log);
    REQUIRE(replay.size() == truth.size());
    for (std::size_t g = 0; g < truth.size(); ++g) CHECK(replay[g] == truth[g]);

    // The champion is the first-created individual with the highest fitness.
    double best = -1e300;
    std::uint64_t best_id = 0;
    for (const auto& e : log.events)
        if ((e.kind == EventKind::OffspringCreated || e.kind == EventKind::Injected) && e.observed_fitness > best) {
            best = e.observed_fitness;
            best_id = e.individual_id;
        }
    CHECK(r.champion.individual_id == best_id);
    CHECK(r.champion.fitness == best);
    const auto rows = read_champions_csv(dir / "champions.csv");
    REQUIRE(rows.size() == 13);
    CHECK(rows.back().individual_id == best_id);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].fitness >= rows[i - 1].fitness);
}

TEST_CASE("replay rejects an inconsistent log") {
    const fs::path dir = fresh_dir("replay_bad");
    const ExperimentConfig c = quick(ExperimentKind::CooptAfpo, 3);
    RunOptions opt;
    opt.run_dir = dir;
    run_experiment(c, opt);
    EventLog log = read_event_log(dir / "events.csv");
    SUBCASE("wrong parent") {
        for (auto& e : log.events)
            if (e.kind == EventKind::OffspringCreated && e.generation == 2) {
                e.parent_id = 100000;
                break;
            }
        CHECK_THROWS_AS(replay_afpo(log), DomainError);
    }
    SUBCASE("missing verdict") {
        for (std::size_t i = 0; i < log.events.size(); ++i)
            if (log.events[i].kind == EventKind::Survived && log.events[i].generation == 3) {
                log.events.erase(log.events.begin() + static_cast<std::ptrdiff_t>(i));
                break;
            }
        CHECK_THROWS_AS(replay_afpo(log), DomainError);
    }
    SUBCASE("age not incremented") {
        for (auto& e : log.events)
            if (e.kind == EventKind::OffspringCreated && e.generation == 1) {
                e.age += 1;
                break;
            }
        CHECK_THROWS_AS(replay_afpo(log), DomainError);
    }
}

TEST_CASE("map-elites replay reproduces the archive") {
    const fs::path dir = fresh_dir("replay_me");
    ExperimentConfig c = quick(ExperimentKind::CooptMapElites, 10);
    std::vector<std::map<Niche, MemberState>> truth;
    RunOptions opt;
    opt.run_dir = dir;
    opt.on_generation = [&](int, const std::vector<Individual>*, const Archive* arc, const GenerationResult&) {
        REQUIRE(arc != nullptr);
        std::map<Niche, MemberState> s;
        for (const auto& [n, ind] : *arc) s.emplace(n, member_state(ind));
        truth.push_back(s);
    };
    run_experiment(c, opt);
    const EventLog log = read_event_log(dir / "events.csv");
    CHECK(log.algorithm() == "map_elites");
    const auto replay = replay_map_elites(log);
    REQUIRE(replay.size() == truth.size());
    for (std::size_t g = 0; g < truth.size(); ++g) CHECK(replay[g] == truth[g]);
}

TEST_CASE("interrupted run resumes to byte-identical outputs") {
    for (auto kind : {ExperimentKind::CooptAfpo, ExperimentKind::CooptMapElites, ExperimentKind::MorphOnly}) {
        CAPTURE(to_string(kind));
        const ExperimentConfig c = quick(kind, 11);
        const Landscape land = synthetic(kGrid2x2, task_hash(c.task));
        const fs::path full = fresh_dir("resume_full");
        const fs::path part = fresh_dir("resume_part");
        RunOptions a;
        a.run_dir = full;
        a.landscape = kind == ExperimentKind::MorphOnly ? &land : nullptr;
        const RunResult ra = run_experiment(c, a);

        RunOptions b = a;
        b.run_dir = part;
        b.stop_after_generation = 7;
        const RunResult stopped = run_experiment(c, b);
        CHECK_FALSE(stopped.finished);
        CHECK(stopped.generations_completed == 7);
        b.stop_after_generation.reset();
        const RunResult rb = run_experiment(c, b);
        CHECK(rb.resumed);
        CHECK(rb.finished);
        CHECK(rb.champion == ra.champion);
        CHECK(rb.evaluations == ra.evaluations);
        CHECK(slurp(part / "events.csv") == slurp(full / "events.csv"));
        CHECK(slurp(part / "champions.csv") == slurp(full / "champions.csv"));
        if (kind != ExperimentKind::MorphOnly)
            CHECK(slurp(part / "discoveries.bin") == slurp(full / "discoveries.bin"));

        // Resuming a finished run does nothing.
        const RunResult again = run_experiment(c, b);
        CHECK(again.champion == ra.champion);
        CHECK(slurp(part / "events.csv") == slurp(full / "events.csv"));
    }
}

TEST_CASE("checkpoint of another configuration is refused") {
    const fs::path dir = fresh_dir("resume_mismatch");
    ExperimentConfig c = quick(ExperimentKind::CooptAfpo, 4);
    RunOptions o;
    o.run_dir = dir;
    run_experiment(c, o);
    c.sigma = 0.2;
    CHECK_THROWS_AS(run_experiment(c, o), ConfigMismatch);
    o.resume = false;
    CHECK_NOTHROW(run_experiment(c, o));
}

TEST_CASE("morph-only runs need a matching landscape") {
    const fs::path dir = fresh_dir("morph_land");
    ExperimentConfig c = quick(ExperimentKind::MorphOnly, 5);
    RunOptions o;
    o.run_dir = dir;
    CHECK_THROWS_AS(run_experiment(c, o), DomainError);
    const Landscape other = synthetic(kGrid2x2, task_hash(c.task) ^ 1);
    o.landscape = &other;
    CHECK_THROWS_AS(run_experiment(c, o), ConfigMismatch);
    const Landscape good = synthetic(kGrid2x2, task_hash(c.task));
    o.landscape = &good;
    const RunResult r = run_experiment(c, o);
    CHECK(r.champion.fitness == *good.fitness(r.champion.morphology_id));
    CHECK_FALSE(fs::exists(dir / "discoveries.bin"));
}

TEST_CASE("discoveries keep the best observed fitness per morphology") {
    const fs::path dir = fresh_dir("discoveries");
    const ExperimentConfig c = quick(ExperimentKind::CooptAfpo, 6);
    RunOptions o;
    o.run_dir = dir;
    run_experiment(c, o);
    const EventLog log = read_event_log(dir / "events.csv");
    std::map<MorphologyId, double> best;
    for (const auto& e : log.events) {
        if (e.kind != EventKind::OffspringCreated && e.kind != EventKind::Injected) continue;
        auto it = best.find(e.morphology_id);
        if (it == best.end() || e.observed_fitness > it->second) best[e.morphology_id] = e.observed_fitness;
    }
    const Landscape disc = load_landscape(dir / "discoveries.bin");
    CHECK(disc.task_hash() == task_hash(c.task));
    REQUIRE(disc.size() == best.size());
    for (const auto& [id, f] : best) {
        const LandscapeRecord* r = disc.find(id);
        REQUIRE(r != nullptr);
        CHECK(r->best_fitness == f);
        CHECK(r->source == RecordSource::CooptUpdate);
        CHECK(r->controller.size() == NetworkShape::for_grid(kGrid2x2).parameter_count());
    }
}

TEST_CASE("repetition seeds and run ids") {
    CHECK(repetition_seed(1, 0) != repetition_seed(1, 1));
    CHECK(repetition_seed(1, 0) == repetition_seed(1, 0));
    ExperimentConfig c = ExperimentConfig::defaults_for(ExperimentKind::CooptAfpo);
    c.seed = 3;
    CHECK(run_id(c, 7) == "coopt_afpo-s3-r007");
}
