#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "voxlab/cli.hpp"
#include "voxlab/landscape_io.hpp"

using namespace voxlab;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream o, e;
    const int code = run_cli(args, o, e);
    return {code, o.str(), e.str()};
}

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

std::string header_of(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line))
        if (line.empty() || line[0] != '#') return line;
    return {};
}

// Short episodes keep the 2x2 pipeline at a few seconds.
fs::path write_config(const fs::path& dir) {
    const fs::path p = dir / "small.cfg";
    std::ofstream out(p);
    out << "grid = 2x2\nbudget = 2\npop_size = 4\ntask.episode_control_steps = 8\ntask.settle_steps = 30\n"
        << "chunk_size = 125\ngenerations = 6\ncheckpoint_every = 3\n";
    return p;
}

}  // namespace

TEST_CASE("enumerate prints the viable count") {
    const Run r = cli({"enumerate", "--grid", "2x2"});
    CHECK(r.code == kExitOk);
    CHECK(r.out == "112\n");
    const Run l = cli({"enumerate", "--grid", "2x2", "--list"});
    CHECK(l.code == kExitOk);
    CHECK(std::count(l.out.begin(), l.out.end(), '\n') == 113);
}

TEST_CASE("usage errors exit with 2") {
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"frobnicate"}).code == kExitUsage);
    CHECK(cli({"enumerate", "--grid", "3by3"}).code == kExitUsage);
    CHECK(cli({"--workers", "0", "enumerate"}).code == kExitUsage);
    CHECK(cli({"evolve", "--algorithm", "hillclimb"}).code == kExitUsage);
    CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("map, evolve, merge, analyze and export on a 2x2 grid") {
    const fs::path root = fresh_dir("cli_pipeline");
    const std::string cfg = write_config(root).string();
    const std::string out = (root / "out").string();

    const Run m = cli({"--config", cfg, "--out", out, "map"});
    REQUIRE(m.code == kExitOk);
    CHECK(m.out.find("morphologies_searched=112\n") != std::string::npos);
    CHECK(m.out.find("records=112\n") != std::string::npos);
    const fs::path land = root / "out" / "landscape" / "landscape.bin";
    const std::string before = slurp(land);

    const Run again = cli({"--config", cfg, "--out", out, "map"});
    CHECK(again.code == kExitOk);
    CHECK(again.out.find("chunks_computed=0\n") != std::string::npos);
    CHECK(again.out.find("evaluations=0\n") != std::string::npos);
    CHECK(slurp(land) == before);

    // Different budget against the same directory.
    CHECK(cli({"--config", cfg, "--out", out, "map", "--budget", "3"}).code == kExitConfigMismatch);

    const Run e = cli({"--config", cfg, "--out", out, "evolve", "--algorithm", "afpo", "--repetitions", "2"});
    REQUIRE(e.code == kExitOk);
    CHECK(e.out.find("coopt_afpo-s1-r000 generations=6 finished=1") != std::string::npos);
    CHECK(fs::exists(root / "out" / "runs" / "coopt_afpo-s1-r001" / "events.csv"));

    const Run mo = cli({"--config", cfg, "--out", out, "evolve", "--algorithm", "morph-only"});
    REQUIRE(mo.code == kExitOk);

    const Run g = cli({"--config", cfg, "--out", out, "merge", "--output", (root / "merged.bin").string()});
    REQUIRE(g.code == kExitOk);
    CHECK(g.out.find("records=112\n") != std::string::npos);
    const Landscape base = load_landscape(land), merged = load_landscape(root / "merged.bin");
    for (const auto& [id, r] : merged.records()) CHECK(r.best_fitness >= base.find(id)->best_fitness);

    const fs::path an = root / "out" / "analysis";
    CHECK(cli({"--out", out, "analyze", "ruggedness"}).code == kExitOk);
    CHECK(header_of(an / "ruggedness.csv") == "statistic,value");
    CHECK(cli({"--out", out, "analyze", "distribution", "--group-by", "active_count"}).code == kExitOk);
    CHECK(header_of(an / "distribution_active_count.csv") == "group,count,mean,median,q1,q3,min,max");
    CHECK(cli({"--out", out, "analyze", "ranking"}).code == kExitOk);
    CHECK(fs::exists(an / "ranking_correlation.csv"));

    const std::string r0 = (root / "out" / "runs" / "coopt_afpo-s1-r000").string();
    const std::string r1 = (root / "out" / "runs" / "coopt_afpo-s1-r001").string();
    CHECK(cli({"--out", out, "analyze", "champions", "--runs", r0, r1}).code == kExitOk);
    CHECK(cli({"--out", out, "analyze", "mutation-effects", "--runs", r0, r1}).code == kExitOk);
    CHECK(header_of(an / "mutation_effects.csv").rfind("run_id,generation,body_offspring", 0) == 0);
    const Run st = cli({"--out", out, "analyze", "stats-test", "--runs-a", r0, "--runs-b", r1});
    CHECK(st.code == kExitOk);
    CHECK(st.out.find("\nU=") != std::string::npos);
    CHECK(cli({"--out", out, "export"}).code == kExitOk);
    CHECK(header_of(an / "landscape.csv") == "id,fitness,active_count,passive_count,is_local_max");
    CHECK(cli({"--out", out, "analyze", "ruggedness", "--landscape", (root / "missing.bin").string()}).code ==
          kExitError);
}

TEST_CASE("workers: flag wins over the environment") {
    const fs::path root = fresh_dir("cli_workers");
    const std::string cfg = write_config(root).string();
    setenv("VOXLAB_WORKERS", "zero", 1);
    CHECK(cli({"--config", cfg, "--out", (root / "a").string(), "map", "--range", "0:100"}).code == kExitUsage);
    CHECK(cli({"--workers", "2", "--config", cfg, "--out", (root / "b").string(), "map", "--range", "0:100"}).code ==
          kExitOk);
    setenv("VOXLAB_WORKERS", "2", 1);
    CHECK(cli({"--config", cfg, "--out", (root / "c").string(), "map", "--range", "0:100"}).code == kExitOk);
    unsetenv("VOXLAB_WORKERS");
    CHECK(slurp(root / "b" / "landscape" / "landscape.bin") == slurp(root / "c" / "landscape" / "landscape.bin"));
}
