#include <doctest.h>

#include <filesystem>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "voxlab/errors.hpp"
#include "voxlab/landscape.hpp"
#include "voxlab/landscape_io.hpp"

using namespace voxlab;
namespace fs = std::filesystem;

namespace {

const oracle::Graph& graph2x2() {
    static const oracle::Graph g(2, 2);
    return g;
}

const MorphologySpace& space2x2() {
    static const MorphologySpace s(kGrid2x2);
    return s;
}

// Coarse values so that ties and plateaus occur.
std::vector<double> synthetic(Rng& rng, int levels) {
    std::uniform_int_distribution<int> d(0, levels - 1);
    std::vector<double> f(graph2x2().size());
    for (auto& v : f) v = d(rng) * 0.25 - 1.0;
    return f;
}

LandscapeView view_of(const std::vector<double>& f) {
    std::vector<double> dense(kGrid2x2.id_count(), -1e9);
    const auto& g = graph2x2();
    for (std::size_t i = 0; i < g.size(); ++i) dense[g.ids[i]] = f[i];
    return LandscapeView(space2x2(), dense);
}

Landscape landscape_of(const std::vector<double>& f, std::uint64_t thash = 7) {
    Landscape l(kGrid2x2, thash);
    const auto& g = graph2x2();
    Rng rng(3);
    for (std::size_t i = 0; i < g.size(); ++i)
        l.put({MorphologyId{g.ids[i]}, f[i], random_controller(NetworkShape::for_grid(kGrid2x2), rng), 30,
               RecordSource::Mapping, std::nullopt});
    return l;
}

std::vector<std::uint64_t> values(const std::vector<MorphologyId>& ids) {
    std::vector<std::uint64_t> out;
    for (auto id : ids) out.push_back(id.value);
    return out;
}

}  // namespace

TEST_CASE("2x2 oracle space matches the library space") {
    CHECK(graph2x2().size() == 112);
    CHECK(values(space2x2().viable_ids()) == graph2x2().ids);
}

TEST_CASE("local maxima match the neighbor-scan oracle") {
    Rng rng(41);
    for (int t = 0; t < 30; ++t) {
        const auto f = synthetic(rng, t % 2 ? 5 : 1000);
        const LandscapeView v = view_of(f);
        CHECK(values(local_maxima(v)) == oracle::local_maxima(graph2x2(), f));
        const auto maxima = local_maxima(v);
        CHECK(std::find(maxima.begin(), maxima.end(), v.global_max()) != maxima.end());
    }
}

TEST_CASE("constant fitness makes every id a plateau maximum") {
    const std::vector<double> f(112, 0.5);
    const LandscapeView v = view_of(f);
    CHECK(local_maxima(v).size() == 112);
    for (auto id : space2x2().viable_ids()) {
        const auto b = hill_climb_basin(id, v);
        CHECK(b.peak == id);
        CHECK(b.steps == 0);
    }
}

TEST_CASE("hill climbing matches the steepest-ascent oracle for all starts") {
    Rng rng(42);
    for (int t = 0; t < 30; ++t) {
        const auto f = synthetic(rng, t % 2 ? 6 : 100000);
        const LandscapeView v = view_of(f);
        const auto& g = graph2x2();
        std::set<std::uint64_t> fixed;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto want = oracle::climb(g, f, static_cast<int>(i));
            const auto got = hill_climb_basin(MorphologyId{g.ids[i]}, v);
            CHECK(got.peak.value == want.first);
            CHECK(got.steps == want.second);
            CHECK(got.steps <= static_cast<int>(g.size()));
            if (got.steps == 0) fixed.insert(g.ids[i]);
        }
        const auto maxima = values(local_maxima(v));
        CHECK(std::set<std::uint64_t>(maxima.begin(), maxima.end()) == fixed);
    }
    CHECK_THROWS_AS(hill_climb_basin(MorphologyId{0}, view_of(std::vector<double>(112, 0.0))), DomainError);
}

TEST_CASE("near-optimality threshold") {
    CHECK(std::abs(near_optimal_threshold(4.42, -5.27, 0.15) - 2.9665) < 1e-9);
    CHECK(near_optimal_threshold(4.42, -5.27, 0.0) == 4.42);
    CHECK(near_optimal_threshold(4.42, -5.27, 1.0) == -5.27);
    CHECK(near_optimal_threshold(1.0, 1.0, 0.3) == 1.0);
    CHECK_THROWS_AS(near_optimal_threshold(0.0, 1.0, 0.5), DomainError);

    Rng rng(43);
    for (int t = 0; t < 20; ++t) {
        const auto f = synthetic(rng, 9);
        const LandscapeView v = view_of(f);
        const double hi = *std::max_element(f.begin(), f.end());
        const double lo = *std::min_element(f.begin(), f.end());
        CHECK(v.max_fitness() == hi);
        CHECK(v.min_fitness() == lo);
        for (double frac : {0.0, 0.15, 0.5, 1.0}) {
            const double thr = frac == 0.0 ? hi : frac == 1.0 ? lo : (hi - lo) * (1 - frac) + lo;
            std::vector<std::uint64_t> want;
            for (std::size_t i = 0; i < f.size(); ++i)
                if (f[i] >= thr) want.push_back(graph2x2().ids[i]);
            CHECK(values(near_optimal_set(v, {frac})) == want);
        }
        CHECK(near_optimal_set(v, {1.0}).size() == 112);
        for (auto id : near_optimal_set(v, {0.0})) CHECK(v.fitness(id) == hi);
    }
}

TEST_CASE("distances match per-node BFS") {
    Rng rng(44);
    const auto& g = graph2x2();
    for (int t = 0; t < 10; ++t) {
        std::vector<MorphologyId> targets;
        std::vector<std::uint64_t> raw;
        const int k = 1 + static_cast<int>(rng() % 5);
        for (int i = 0; i < k; ++i) {
            const auto id = g.ids[rng() % g.size()];
            targets.push_back(MorphologyId{id});
            raw.push_back(id);
        }
        const auto got = distance_to_set(space2x2(), targets, DistanceMetric::Graph);
        const auto want = oracle::distance_to_set(g, raw);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(got[g.ids[i]] == want[i]);
        const auto ham = distance_to_set(space2x2(), targets, DistanceMetric::Hamming);
        for (std::size_t i = 0; i < g.size(); ++i) {
            int best = 99;
            const auto a = oracle::digits(g.ids[i], 4);
            for (auto t2 : raw) {
                const auto b = oracle::digits(t2, 4);
                int d = 0;
                for (int c = 0; c < 4; ++c) d += a[c] != b[c];
                best = std::min(best, d);
            }
            CHECK(ham[g.ids[i]] == best);
            if (want[i] >= 0) CHECK(want[i] >= best);
        }
    }
}

TEST_CASE("ruggedness statistics match the all-pairs oracle") {
    Rng rng(45);
    const auto& g = graph2x2();
    std::vector<std::vector<int>> all;
    for (std::size_t i = 0; i < g.size(); ++i) all.push_back(oracle::bfs(g, static_cast<int>(i)));
    for (int t = 0; t < 20; ++t) {
        const auto f = synthetic(rng, t % 2 ? 7 : 100000);
        const LandscapeView v = view_of(f);
        const auto s = ruggedness_stats(v, {0.15});
        const auto maxima = oracle::local_maxima(g, f);
        const double hi = *std::max_element(f.begin(), f.end());
        const double lo = *std::min_element(f.begin(), f.end());
        const double thr = (hi - lo) * 0.85 + lo;
        std::vector<std::uint64_t> good;
        for (auto m : maxima)
            if (f[g.index.at(m)] >= thr) good.push_back(m);
        std::uint64_t gmax = 0;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (f[i] == hi) {
                gmax = g.ids[i];
                break;
            }
        auto mean_to = [&](const std::vector<std::uint64_t>& set) {
            double sum = 0;
            int n = 0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                int best = -1;
                for (auto m : set) {
                    const int d = all[i][g.index.at(m)];
                    if (d >= 0 && (best < 0 || d < best)) best = d;
                }
                if (best >= 0) {
                    sum += best;
                    ++n;
                }
            }
            return n ? sum / n : 0.0;
        };
        CHECK(s.global_max.value == gmax);
        CHECK(s.local_max_count == maxima.size());
        CHECK(s.near_optimal_local_max_count == good.size());
        CHECK(s.morphologies == 112);
        CHECK(s.threshold == doctest::Approx(thr).epsilon(1e-12));
        CHECK(s.mean_to_local_max == doctest::Approx(mean_to(maxima)).epsilon(1e-12));
        CHECK(s.mean_to_global_max == doctest::Approx(mean_to({gmax})).epsilon(1e-12));
        CHECK(s.mean_to_near_optimal_local_max == doctest::Approx(mean_to(good)).epsilon(1e-12));
    }
}

TEST_CASE("single local maximum makes local and global distances agree") {
    // Fitness = minus graph distance to one id: a single peak.
    const auto& g = graph2x2();
    const auto d = oracle::bfs(g, 17);
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = d[i] >= 0 ? -d[i] : -1000.0 - static_cast<double>(i);
    const LandscapeView v = view_of(f);
    const auto maxima = local_maxima(v);
    if (maxima.size() == 1) {
        const auto s = ruggedness_stats(v, {0.15});
        CHECK(s.mean_to_local_max == s.mean_to_global_max);
    } else {
        // Disconnected components each carry their own peak.
        CHECK(maxima.size() > 1);
    }
}

TEST_CASE("landscape view requires a complete landscape") {
    Landscape l(kGrid2x2, 1);
    l.put({space2x2().viable_ids()[0], 1.0, {}, 0, RecordSource::Mapping, std::nullopt});
    CHECK_FALSE(l.complete(space2x2()));
    CHECK_THROWS_AS(LandscapeView(space2x2(), l), DomainError);
    CHECK_THROWS_AS(l.put({MorphologyId{625}, 1.0, {}, 0, RecordSource::Mapping, std::nullopt}), DomainError);
}

TEST_CASE("binary round-trip is bit-exact") {
    Rng rng(46);
    const auto f = synthetic(rng, 1000);
    Landscape l = landscape_of(f, 0xfeedULL);
    auto rec = *l.find(space2x2().viable_ids()[3]);
    rec.source = RecordSource::CooptUpdate;
    rec.updated_at_generation = 77;
    rec.best_fitness = -0.1 / 3.0;
    l.put(rec);
    auto bare = *l.find(space2x2().viable_ids()[5]);
    bare.controller = {};
    l.put(bare);

    std::stringstream io;
    write_landscape(io, l);
    const std::string bytes = io.str();
    CHECK(bytes.substr(0, 8) == "VXLNDSCP");
    const Landscape back = read_landscape(io);
    CHECK(back == l);
    std::stringstream again;
    write_landscape(again, back);
    CHECK(again.str() == bytes);

    const fs::path p = fs::temp_directory_path() / "voxlab_test_landscape.bin";
    save_landscape(p, l);
    CHECK(load_landscape(p) == l);
    fs::remove(p);

    std::stringstream bad("NOTALAND");
    CHECK_THROWS_AS(read_landscape(bad), IoError);
    std::stringstream cut(bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_AS(read_landscape(cut), IoError);
}

TEST_CASE("csv export") {
    std::vector<double> f(112, 0.0);
    f[0] = 1.5;
    const Landscape l = landscape_of(f);
    const LandscapeView v(space2x2(), l);
    const auto maxima = local_maxima(v);
    std::ostringstream os;
    export_landscape_csv(os, l, &maxima);
    std::istringstream in(os.str());
    std::string line;
    int rows = 0;
    bool header = false;
    while (std::getline(in, line)) {
        if (line[0] == '#') continue;
        if (!header) {
            CHECK(line == "id,fitness,active_count,passive_count,is_local_max");
            header = true;
            continue;
        }
        ++rows;
    }
    CHECK(rows == 112);
}

TEST_CASE("merge keeps the running max") {
    Rng rng(47);
    const auto f = synthetic(rng, 1000);
    const Landscape base = landscape_of(f);

    SUBCASE("self merge") {
        Landscape l = base;
        CHECK(merge_update(l, base) == 0);
        CHECK(l == base);
    }
    SUBCASE("lower discoveries change nothing, higher ones count") {
        Landscape l = base;
        Landscape disc(kGrid2x2, base.task_hash());
        const auto ids = space2x2().viable_ids();
        auto lower = *base.find(ids[0]);
        lower.best_fitness -= 1.0;
        auto higher = *base.find(ids[1]);
        higher.best_fitness += 1.0;
        higher.source = RecordSource::CooptUpdate;
        higher.updated_at_generation = 12;
        disc.put(lower);
        disc.put(higher);
        CHECK(merge_update(l, disc) == 1);
        CHECK(*l.find(ids[0]) == *base.find(ids[0]));
        CHECK(*l.find(ids[1]) == higher);
        for (const auto& [id, r] : l.records()) CHECK(r.best_fitness >= base.find(id)->best_fitness);
    }
    SUBCASE("merge is commutative and associative") {
        std::vector<Landscape> discs;
        for (int k = 0; k < 3; ++k) {
            Landscape d(kGrid2x2, base.task_hash());
            for (auto id : space2x2().viable_ids())
                if (rng() % 3 == 0) {
                    auto r = *base.find(id);
                    r.best_fitness += std::uniform_real_distribution<double>(-1, 1)(rng);
                    d.put(r);
                }
            discs.push_back(d);
        }
        Landscape a = base, b = base, c = base;
        merge_update(a, discs[0]);
        merge_update(a, discs[1]);
        merge_update(a, discs[2]);
        merge_update(b, discs[2]);
        merge_update(b, discs[0]);
        merge_update(b, discs[1]);
        Landscape d01 = discs[0];
        merge_update(d01, discs[1]);
        merge_update(c, discs[2]);
        merge_update(c, d01);
        for (const auto& [id, r] : a.records()) {
            CHECK(b.find(id)->best_fitness == r.best_fitness);
            CHECK(c.find(id)->best_fitness == r.best_fitness);
        }
    }
    SUBCASE("incomparable tasks are refused") {
        Landscape l = base;
        const Landscape other(kGrid2x2, base.task_hash() + 1);
        CHECK_THROWS_AS(merge_update(l, other), ConfigMismatch);
        const Landscape grid3(kGrid3x3, base.task_hash());
        CHECK_THROWS_AS(merge_update(l, grid3), ConfigMismatch);
    }
}

TEST_CASE("offer is a strict running max") {
    Landscape l(kGrid2x2, 1);
    const auto id = space2x2().viable_ids()[0];
    CHECK(l.offer({id, 1.0, {}, 0, RecordSource::CooptUpdate, 1}));
    CHECK_FALSE(l.offer({id, 1.0, {}, 0, RecordSource::CooptUpdate, 2}));
    CHECK_FALSE(l.offer({id, 0.5, {}, 0, RecordSource::CooptUpdate, 3}));
    CHECK(l.offer({id, 2.0, {}, 0, RecordSource::CooptUpdate, 4}));
    CHECK(l.find(id)->updated_at_generation == 4);
}

TEST_CASE("manifest round-trip") {
    const fs::path p = fs::temp_directory_path() / "voxlab_test_manifest.txt";
    ShardManifest m;
    m.config_hash = 0x1234;
    m.completed = {{0, 100}, {200, 300}};
    write_manifest(p, m);
    const auto back = read_manifest(p);
    CHECK(back.config_hash == m.config_hash);
    CHECK(back.completed == m.completed);
    CHECK(back.contains(200, 300));
    CHECK_FALSE(back.contains(100, 200));
    fs::remove(p);
}
