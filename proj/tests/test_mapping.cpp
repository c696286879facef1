#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "voxlab/errors.hpp"
#include "voxlab/landscape_io.hpp"
#include "voxlab/mapping.hpp"

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

MappingConfig small() {
    MappingConfig m;
    m.grid = kGrid2x2;
    m.budget = 3;
    m.search.pop_size = 6;
    m.task.episode_control_steps = 8;
    m.task.settle_steps = 30;
    m.seed_base = 11;
    m.chunk_size = 125;
    return m;
}

}  // namespace

TEST_CASE("2x2 map covers every viable morphology") {
    const fs::path dir = fresh_dir("map_full");
    const MappingConfig m = small();
    const MappingStats s = map_shard(m, dir);
    CHECK(s.finished);
    CHECK(s.chunks_total == 5);
    CHECK(s.chunks_computed == 5);
    CHECK(s.morphologies_searched == 112);
    CHECK(s.records == 112);
    CHECK(s.evaluations == 112u * (6 + 3 * 7));

    const Landscape l = load_landscape(dir / "landscape.bin");
    CHECK(l.task_hash() == task_hash(m.task));
    CHECK(l.complete(MorphologySpace(kGrid2x2)));
    for (const auto& [id, r] : l.records()) {
        CHECK(r.source == RecordSource::Mapping);
        CHECK(r.budget_generations == 3);
        CHECK(r.best_fitness >= -5.5);
        CHECK(r.best_fitness <= 0.0);
        CHECK(r.controller.size() == NetworkShape::for_grid(kGrid2x2).parameter_count());
    }

    SUBCASE("rerun is a no-op") {
        const std::string before = slurp(dir / "landscape.bin");
        const MappingStats again = map_shard(m, dir);
        CHECK(again.finished);
        CHECK(again.chunks_computed == 0);
        CHECK(again.chunks_skipped == 5);
        CHECK(again.evaluations == 0);
        CHECK(slurp(dir / "landscape.bin") == before);
    }
    SUBCASE("records equal an in-memory map of the same range") {
        const Landscape direct = map_range(m, 0, 625);
        CHECK(direct == l);
    }
    SUBCASE("another configuration is refused") {
        MappingConfig other = m;
        other.budget = 4;
        CHECK_THROWS_AS(map_shard(other, dir), ConfigMismatch);
    }
}

TEST_CASE("interrupted mapping resumes to the same landscape") {
    const MappingConfig m = small();
    const fs::path full = fresh_dir("map_ref");
    map_shard(m, full);
    const fs::path dir = fresh_dir("map_resume");
    MappingOptions o;
    o.stop_after_chunks = 2;
    const MappingStats first = map_shard(m, dir, o);
    CHECK_FALSE(first.finished);
    CHECK(first.chunks_computed == 2);
    const MappingStats rest = map_shard(m, dir);
    CHECK(rest.finished);
    CHECK(rest.chunks_skipped == 2);
    CHECK(rest.chunks_computed == 3);
    CHECK(slurp(dir / "landscape.bin") == slurp(full / "landscape.bin"));
}

TEST_CASE("disjoint shards combine to the full map") {
    const MappingConfig m = small();
    const Landscape whole = map_range(m, 0, 625);
    const fs::path dir = fresh_dir("map_shards");
    MappingConfig a = m, b = m;
    a.range_end = 250;
    b.range_begin = 250;
    b.range_end = 625;
    const auto sa = map_shard(a, dir);
    const auto sb = map_shard(b, dir);
    CHECK(sa.morphologies_searched + sb.morphologies_searched == 112);
    const Landscape merged = collect_landscape(dir, kGrid2x2, task_hash(m.task));
    CHECK(merged == whole);
    CHECK_THROWS_AS(collect_landscape(dir, kGrid2x2, task_hash(m.task) + 1), ConfigMismatch);
}

TEST_CASE("results do not depend on the worker count") {
    MappingConfig one = small(), three = small();
    three.workers = 3;
    std::vector<MorphologyTrace> ta, tb;
    CHECK(map_range(one, 0, 625, &ta) == map_range(three, 0, 625, &tb));
    REQUIRE(ta.size() == tb.size());
    for (std::size_t i = 0; i < ta.size(); ++i) {
        CHECK(ta[i].id == tb[i].id);
        CHECK(ta[i].best_fitness == tb[i].best_fitness);
    }
}

TEST_CASE("traces are running maxima and round-trip through csv") {
    const MappingConfig m = small();
    std::vector<MorphologyTrace> traces;
    std::uint64_t evals = 0;
    const Landscape l = map_range(m, 0, 625, &traces, &evals);
    CHECK(evals == 112u * (6 + 3 * 7));
    REQUIRE(traces.size() == 112);
    for (const auto& t : traces) {
        REQUIRE(t.best_fitness.size() == 4);
        for (std::size_t g = 1; g < t.best_fitness.size(); ++g) CHECK(t.best_fitness[g] >= t.best_fitness[g - 1]);
        CHECK(t.best_fitness.back() == l.find(t.id)->best_fitness);
    }
    std::stringstream io;
    write_traces_csv(io, traces, m.hash());
    const auto back = read_traces_csv(io);
    REQUIRE(back.size() == traces.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].id == traces[i].id);
        CHECK(back[i].best_fitness == traces[i].best_fitness);
    }

    const fs::path dir = fresh_dir("map_traces");
    map_shard(m, dir);
    const auto collected = collect_traces(dir);
    REQUIRE(collected.size() == 112);
    for (std::size_t i = 0; i < collected.size(); ++i) CHECK(collected[i].best_fitness == traces[i].best_fitness);
}

TEST_CASE("mapping config hash and chunking") {
    MappingConfig m = small();
    CHECK(default_chunk_size(kGrid3x3) == (1953125 + 127) / 128);
    CHECK(default_chunk_size(kGrid2x2) == 5);
    MappingConfig r = m;
    r.range_begin = 100;
    r.workers = 4;
    CHECK(r.hash() == m.hash());
    r.seed_base = 12;
    CHECK(r.hash() != m.hash());
    m.range_end = 0;
    CHECK(m.effective_end() == 625);
    m.range_begin = 700;
    CHECK_THROWS_AS(map_shard(m, fresh_dir("map_bad")), DomainError);
}
