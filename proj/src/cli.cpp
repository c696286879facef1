#include "voxlab/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "voxlab/analysis.hpp"
#include "voxlab/config.hpp"
#include "voxlab/errors.hpp"
#include "voxlab/event_log.hpp"
#include "voxlab/experiment.hpp"
#include "voxlab/landscape_io.hpp"
#include "voxlab/mapping.hpp"

namespace voxlab {

namespace fs = std::filesystem;

namespace {

struct Globals {
    std::uint64_t seed = 1;
    std::string config;
    int workers = 1;
    std::string out = "voxlab-out";
};

int resolve_workers(const CLI::Option* flag, int flag_value, int fallback) {
    if (flag->count()) return flag_value;
    if (const char* env = std::getenv("VOXLAB_WORKERS")) {
        try {
            const int v = std::stoi(env);
            if (v >= 1) return v;
        } catch (const std::exception&) {
        }
        throw DomainError(std::string("VOXLAB_WORKERS must be a positive integer, got '") + env + "'");
    }
    return fallback;
}

struct Loaded {
    Landscape landscape;
    std::unique_ptr<MorphologySpace> space;
    std::unique_ptr<LandscapeView> view;
};

Loaded load_complete(const fs::path& path) {
    Loaded l;
    l.landscape = load_landscape(path);
    l.space = std::make_unique<MorphologySpace>(l.landscape.grid());
    l.view = std::make_unique<LandscapeView>(*l.space, l.landscape);
    return l;
}

std::vector<fs::path> run_dirs(const std::vector<std::string>& given, const fs::path& out) {
    std::vector<fs::path> dirs;
    if (!given.empty()) {
        for (const auto& d : given) dirs.emplace_back(d);
        return dirs;
    }
    const fs::path root = out / "runs";
    if (fs::is_directory(root))
        for (const auto& e : fs::directory_iterator(root))
            if (fs::exists(e.path() / "events.csv")) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

void write_text(const fs::path& path, const std::string& text, std::ostream& out) {
    write_file_atomic(path, text);
    out << "wrote " << path.string() << "\n";
}

void require_same_task(const EventLog& log, const Landscape& landscape, const fs::path& dir) {
    if (log.task_hash() != landscape.task_hash())
        throw ConfigMismatch("run " + dir.string() + " used a different task configuration than the landscape");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"voxlab: voxel soft-robot brain-body co-optimization lab"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    auto* seed_opt = app.add_option("--seed", g.seed, "Master seed");
    app.add_option("--config", g.config, "key=value configuration file");
    auto* workers_opt = app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Output root (landscape/, runs/, analysis/)");

    // enumerate
    auto* enumerate = app.add_subcommand("enumerate", "Count or list viable morphologies");
    std::string grid_text = "3x3";
    bool list = false;
    enumerate->add_option("--grid", grid_text, "Grid shape, e.g. 3x3");
    enumerate->add_flag("--list", list, "Print every viable id");

    // map
    auto* map = app.add_subcommand("map", "Exhaustive landscape mapping (sharded, resumable)");
    std::string map_grid = "3x3", range_text;
    int budget = 300, map_pop = 20;
    std::uint64_t chunk = 0;
    std::optional<std::size_t> stop_chunks;
    std::string map_dir;
    auto* map_grid_opt = map->add_option("--grid", map_grid);
    auto* budget_opt = map->add_option("--budget", budget, "Controller-search generations per morphology");
    auto* map_pop_opt = map->add_option("--pop-size", map_pop);
    map->add_option("--range", range_text, "Id range begin:end");
    auto* chunk_opt = map->add_option("--chunk-size", chunk);
    map->add_option("--stop-after-chunks", stop_chunks);
    map->add_option("--dir", map_dir, "Mapping directory (default <out>/landscape)");

    // evolve
    auto* evolve = app.add_subcommand("evolve", "Co-optimization or morphology-only campaigns");
    std::string algorithm, evo_grid = "3x3", evo_landscape;
    int generations = 0, evo_pop = 0, batch = 0, reps = 1, every = 0;
    double p_body = 0.5, sigma = 0.1;
    std::optional<int> stop_after;
    bool no_resume = false;
    evolve->add_option("--algorithm", algorithm, "afpo | map-elites | morph-only")
        ->required()
        ->check(CLI::IsMember({"afpo", "map-elites", "morph-only"}));
    auto* evo_grid_opt = evolve->add_option("--grid", evo_grid);
    auto* gen_opt = evolve->add_option("--generations", generations);
    auto* evo_pop_opt = evolve->add_option("--pop-size", evo_pop);
    auto* batch_opt = evolve->add_option("--batch-size", batch);
    auto* pbody_opt = evolve->add_option("--p-body", p_body);
    auto* sigma_opt = evolve->add_option("--sigma", sigma);
    auto* reps_opt = evolve->add_option("--repetitions", reps);
    auto* every_opt = evolve->add_option("--checkpoint-every", every);
    evolve->add_option("--landscape", evo_landscape, "Oracle (morph-only) or pruning reference landscape");
    evolve->add_option("--stop-after", stop_after, "Stop after this generation (no final checkpoint)");
    evolve->add_flag("--no-resume", no_resume, "Ignore existing checkpoints");

    // merge
    auto* merge = app.add_subcommand("merge", "Update a landscape with co-optimization discoveries");
    std::string merge_landscape, merge_output;
    std::vector<std::string> merge_runs;
    merge->add_option("--landscape", merge_landscape);
    merge->add_option("--runs", merge_runs, "Run directories (default: all under <out>/runs)");
    merge->add_option("--output", merge_output, "Output landscape (default: overwrite --landscape)");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Analyses; each writes a CSV under <out>/analysis");
    analyze->require_subcommand(1);
    std::string an_landscape;
    std::vector<std::string> an_runs;
    double fraction = 0.15;
    auto add_common = [&](CLI::App* sub, bool runs) {
        sub->add_option("--landscape", an_landscape);
        if (runs) sub->add_option("--runs", an_runs);
        sub->add_option("--fraction", fraction, "Near-optimality fraction");
    };
    auto* a_dist = analyze->add_subcommand("distribution");
    std::string group = "active_count";
    int bins = 40, frac_bins = 5;
    add_common(a_dist, false);
    a_dist->add_option("--group-by", group)->check(CLI::IsMember({"none", "active_count", "active_fraction"}));
    a_dist->add_option("--bins", bins, "Histogram bins");
    a_dist->add_option("--fraction-bins", frac_bins);
    auto* a_rank = analyze->add_subcommand("ranking");
    std::string rank_dir;
    std::vector<double> fractions{1.0, 0.5, 0.05, 0.01};
    a_rank->add_option("--dir", rank_dir, "Mapping directory (default <out>/landscape)");
    a_rank->add_option("--fractions", fractions);
    auto* a_champ = analyze->add_subcommand("champions");
    add_common(a_champ, true);
    auto* a_mut = analyze->add_subcommand("mutation-effects");
    add_common(a_mut, true);
    auto* a_rug = analyze->add_subcommand("ruggedness");
    std::string metric = "graph";
    add_common(a_rug, false);
    a_rug->add_option("--metric", metric)->check(CLI::IsMember({"graph", "hamming"}));
    auto* a_stats = analyze->add_subcommand("stats-test");
    std::vector<std::string> runs_a, runs_b;
    std::string label_a = "a", label_b = "b", measure = "observed";
    a_stats->add_option("--runs-a", runs_a)->required();
    a_stats->add_option("--runs-b", runs_b)->required();
    a_stats->add_option("--label-a", label_a);
    a_stats->add_option("--label-b", label_b);
    a_stats->add_option("--measure", measure, "observed | true (champion fitness)")
        ->check(CLI::IsMember({"observed", "true"}));
    a_stats->add_option("--landscape", an_landscape);

    // export
    auto* exp = app.add_subcommand("export", "CSV bundle for plotting");
    std::string exp_landscape;
    exp->add_option("--landscape", exp_landscape);

    std::vector<const char*> argv{"voxlab"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const fs::path root(g.out);
    const fs::path landscape_default = root / "landscape" / "landscape.bin";
    auto landscape_path = [&](const std::string& given) {
        return given.empty() ? landscape_default : fs::path(given);
    };
    const fs::path analysis = root / "analysis";

    try {
        if (enumerate->parsed()) {
            const GridShape grid = parse_grid(grid_text);
            const auto ids = enumerate_viable(grid);
            if (list)
                for (const auto id : ids) out << id.value << ' ' << decode(id, grid).to_string() << '\n';
            out << ids.size() << '\n';
            return kExitOk;
        }

        if (map->parsed()) {
            ExperimentConfig c = g.config.empty() ? ExperimentConfig::defaults_for(ExperimentKind::MapLandscape)
                                                  : load_config(g.config, ExperimentKind::MapLandscape);
            c.kind = ExperimentKind::MapLandscape;
            if (map_grid_opt->count() || g.config.empty()) c.grid = parse_grid(map_grid);
            if (budget_opt->count()) c.budget = budget;
            if (map_pop_opt->count()) c.pop_size = map_pop;
            if (chunk_opt->count()) c.chunk_size = chunk;
            if (seed_opt->count()) c.seed = g.seed;
            if (!range_text.empty()) {
                const auto colon = range_text.find(':');
                if (colon == std::string::npos) throw DomainError("--range expects begin:end");
                c.range_begin = std::stoull(range_text.substr(0, colon));
                c.range_end = std::stoull(range_text.substr(colon + 1));
            }
            c.workers = resolve_workers(workers_opt, g.workers, c.workers);
            c.validate();
            MappingOptions opts;
            opts.stop_after_chunks = stop_chunks;
            const fs::path dir = map_dir.empty() ? root / "landscape" : fs::path(map_dir);
            const auto stats = map_shard(MappingConfig::from(c), dir, opts);
            out << "chunks_total=" << stats.chunks_total << "\n";
            out << "chunks_computed=" << stats.chunks_computed << "\n";
            out << "chunks_skipped=" << stats.chunks_skipped << "\n";
            out << "morphologies_searched=" << stats.morphologies_searched << "\n";
            out << "evaluations=" << stats.evaluations << "\n";
            if (stats.finished) out << "records=" << stats.records << "\n";
            return kExitOk;
        }

        if (evolve->parsed()) {
            const ExperimentKind kind = parse_experiment_kind(algorithm);
            ExperimentConfig c = g.config.empty() ? ExperimentConfig::defaults_for(kind) : load_config(g.config, kind);
            c.kind = kind;
            if (evo_grid_opt->count() || g.config.empty()) c.grid = parse_grid(evo_grid);
            if (gen_opt->count()) c.generations = generations;
            if (evo_pop_opt->count()) c.pop_size = evo_pop;
            if (batch_opt->count()) c.batch_size = batch;
            if (pbody_opt->count()) c.p_body = p_body;
            if (sigma_opt->count()) c.sigma = sigma;
            if (reps_opt->count()) c.repetitions = reps;
            if (every_opt->count()) c.checkpoint_every = every;
            if (seed_opt->count()) c.seed = g.seed;
            c.workers = resolve_workers(workers_opt, g.workers, c.workers);
            c.validate();

            std::optional<Landscape> land;
            const fs::path lpath = landscape_path(evo_landscape);
            if (kind == ExperimentKind::MorphOnly || !evo_landscape.empty()) land = load_landscape(lpath);

            for (int rep = 0; rep < c.repetitions; ++rep) {
                ExperimentConfig rc = c;
                rc.seed = repetition_seed(c.seed, rep);
                rc.repetitions = 1;
                RunOptions opts;
                opts.run_dir = root / "runs" / run_id(c, rep);
                opts.landscape = land ? &*land : nullptr;
                opts.stop_after_generation = stop_after;
                opts.resume = !no_resume;
                const auto r = run_experiment(rc, opts);
                out << run_id(c, rep) << " generations=" << r.generations_completed
                    << " finished=" << (r.finished ? 1 : 0) << " champion_fitness=" << format_double(r.champion.fitness)
                    << " champion_morphology=" << r.champion.morphology_id.value << "\n";
            }
            return kExitOk;
        }

        if (merge->parsed()) {
            const fs::path lpath = landscape_path(merge_landscape);
            Landscape land = load_landscape(lpath);
            std::size_t updates = 0, added = 0;
            for (const auto& dir : run_dirs(merge_runs, root)) {
                const fs::path disc = dir / "discoveries.bin";
                if (!fs::exists(disc)) continue;
                const Landscape d = load_landscape(disc);
                const std::size_t before = land.size();
                updates += merge_update(land, d);
                added += land.size() - before;
            }
            const fs::path dest = merge_output.empty() ? lpath : fs::path(merge_output);
            save_landscape(dest, land);
            out << "updates=" << updates << "\nadded=" << added << "\nrecords=" << land.size() << "\n";
            return kExitOk;
        }

        if (analyze->parsed()) {
            const Meta base{};
            if (a_dist->parsed()) {
                const Landscape land = load_landscape(landscape_path(an_landscape));
                const auto groups = distribution_report(land, parse_group_by(group), frac_bins);
                Meta meta{{"task_hash", hash_hex(land.task_hash())}, {"group_by", group}};
                std::ostringstream s;
                write_group_stats_csv(s, groups, meta);
                write_text(analysis / ("distribution_" + group + ".csv"), s.str(), out);
                std::vector<double> values;
                for (const auto& [id, r] : land.records()) values.push_back(r.best_fitness);
                std::ostringstream h;
                write_histogram_csv(h, make_histogram(values, bins), {{"task_hash", hash_hex(land.task_hash())}});
                write_text(analysis / "fitness_histogram.csv", h.str(), out);
                return kExitOk;
            }
            if (a_rank->parsed()) {
                const fs::path dir = rank_dir.empty() ? root / "landscape" : fs::path(rank_dir);
                const auto traces = collect_traces(dir);
                std::vector<std::vector<double>> values;
                for (const auto& t : traces) values.push_back(t.best_fitness);
                std::vector<RankingCurve> curves;
                for (const double f : fractions) {
                    try {
                        curves.push_back(ranking_correlation(values, f));
                    } catch (const DomainError& e) {
                        err << "skipping fraction " << f << ": " << e.what() << "\n";
                    }
                }
                std::ostringstream s;
                write_ranking_csv(s, curves, {{"morphologies", std::to_string(values.size())}});
                write_text(analysis / "ranking_correlation.csv", s.str(), out);
                return kExitOk;
            }
            if (a_champ->parsed() || a_mut->parsed()) {
                const Loaded l = load_complete(landscape_path(an_landscape));
                const double threshold = near_optimal_threshold(*l.view, {fraction});
                std::vector<ChampionDiagnostics> champs;
                std::ostringstream s;
                Meta meta{{"task_hash", hash_hex(l.landscape.task_hash())},
                          {"threshold", format_double(threshold)},
                          {"fraction", format_double(fraction)}};
                const auto dirs = run_dirs(an_runs, root);
                if (dirs.empty()) throw DomainError("no run directories found");
                bool first = true;
                for (const auto& dir : dirs) {
                    const EventLog log = read_event_log(dir / "events.csv");
                    require_same_task(log, l.landscape, dir);
                    const std::string id = dir.filename().string();
                    if (a_champ->parsed()) {
                        champs.push_back(champion_diagnostics(id, log, *l.view, threshold));
                    } else {
                        const auto rows = mutation_effects(log, [&](MorphologyId m) { return l.view->fitness(m); });
                        std::ostringstream part;
                        write_mutation_effects_csv(part, id, rows, first ? meta : Meta{});
                        std::string text = part.str();
                        if (!first) text.erase(0, text.find('\n') + 1);
                        s << text;
                        first = false;
                    }
                }
                if (a_champ->parsed()) {
                    write_champions_csv(s, champs, meta);
                    write_text(analysis / "champions.csv", s.str(), out);
                } else {
                    write_text(analysis / "mutation_effects.csv", s.str(), out);
                }
                return kExitOk;
            }
            if (a_rug->parsed()) {
                const Loaded l = load_complete(landscape_path(an_landscape));
                const auto stats = ruggedness_stats(*l.view, {fraction},
                                                    metric == "graph" ? DistanceMetric::Graph : DistanceMetric::Hamming);
                std::ostringstream s;
                write_ruggedness_csv(s, stats,
                                     {{"task_hash", hash_hex(l.landscape.task_hash())},
                                      {"metric", metric},
                                      {"threshold", format_double(stats.threshold)}});
                write_text(analysis / "ruggedness.csv", s.str(), out);
                return kExitOk;
            }
            if (a_stats->parsed()) {
                std::optional<Loaded> l;
                if (measure == "true") l = load_complete(landscape_path(an_landscape));
                auto champion_values = [&](const std::vector<std::string>& dirs) {
                    std::vector<double> v;
                    for (const auto& d : dirs) {
                        const EventLog log = read_event_log(fs::path(d) / "events.csv");
                        if (l) {
                            require_same_task(log, l->landscape, d);
                            v.push_back(champion_diagnostics(d, log, *l->view, 0.0).true_fitness);
                        } else {
                            double best = -std::numeric_limits<double>::infinity();
                            for (const auto& e : log.events) best = std::max(best, e.observed_fitness);
                            v.push_back(best);
                        }
                    }
                    return v;
                };
                const auto a = champion_values(runs_a);
                const auto b = champion_values(runs_b);
                const auto r = mann_whitney_u(a, b);
                std::ostringstream s;
                write_stats_test_csv(s, label_a, label_b, a, b, r, {{"measure", measure}});
                write_text(analysis / "stats_test.csv", s.str(), out);
                out << "U=" << format_double(r.u) << " p=" << format_double(r.p) << "\n";
                return kExitOk;
            }
        }

        if (exp->parsed()) {
            const Landscape land = load_landscape(landscape_path(exp_landscape));
            const MorphologySpace space(land.grid());
            const Meta meta{{"task_hash", hash_hex(land.task_hash())}};
            std::optional<std::vector<MorphologyId>> maxima;
            if (land.complete(space)) {
                const LandscapeView view(space, land);
                maxima = local_maxima(view);
                const auto stats = ruggedness_stats(view, {fraction});
                std::ostringstream r;
                write_ruggedness_csv(r, stats,
                                     {{"task_hash", hash_hex(land.task_hash())},
                                      {"metric", "graph"},
                                      {"threshold", format_double(stats.threshold)}});
                write_text(analysis / "ruggedness.csv", r.str(), out);
            }
            std::ostringstream s;
            export_landscape_csv(s, land, maxima ? &*maxima : nullptr);
            write_text(analysis / "landscape.csv", s.str(), out);
            for (const char* gb : {"none", "active_count", "active_fraction"}) {
                std::ostringstream d;
                Meta m = meta;
                m.emplace_back("group_by", gb);
                write_group_stats_csv(d, distribution_report(land, parse_group_by(gb)), m);
                write_text(analysis / (std::string("distribution_") + gb + ".csv"), d.str(), out);
            }
            std::vector<double> values;
            for (const auto& [id, r] : land.records()) values.push_back(r.best_fitness);
            if (!values.empty()) {
                std::ostringstream h;
                write_histogram_csv(h, make_histogram(values, 40), meta);
                write_text(analysis / "fitness_histogram.csv", h.str(), out);
            }
            return kExitOk;
        }
    } catch (const ConfigMismatch& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfigMismatch;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace voxlab
