#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "percolab/cli/experiments.hpp"

using namespace percolab;
using namespace percolab::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("percolab_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Config config(const std::string& text) { return Config::parse(text, "test.cfg"); }

struct Shell {
  int code;
  std::string err;
};

Shell shell(const std::string& args, const fs::path& dir) {
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string(PERCOLAB_CLI) + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " +
                          err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(err)};
}

std::map<std::string, std::string> digests(const nlohmann::json& manifest) {
  std::map<std::string, std::string> out;
  for (const auto& o : manifest["outputs"]) out[o["file"].get<std::string>()] = o["sha256"].get<std::string>();
  return out;
}

}  // namespace

TEST_CASE("config parsing", "[cli]") {
  const auto c = config("# header\nkind = tail\n  p = 0.4 , 0.5   # trailing\n\nseed=7\n");
  REQUIRE(c.str("kind") == "tail");
  REQUIRE(c.reals("p") == std::vector<double>{0.4, 0.5});
  REQUIRE(c.u64("seed", 0) == 7);
  try {
    config("kind = tail\nkind = zeta\n");
    FAIL("duplicate key accepted");
  } catch (const ConfigurationError& e) {
    REQUIRE(std::string(e.what()).find("test.cfg:2") != std::string::npos);
  }
  REQUIRE_THROWS_AS(config("kind tail\n"), ConfigurationError);
  REQUIRE_THROWS_AS(config("= 3\n"), ConfigurationError);
}

TEST_CASE("threshold lists", "[cli]") {
  REQUIRE(config("t = 1,2,5").thresholds("t") == std::vector<std::uint64_t>{1, 2, 5});
  REQUIRE(config("t = 3..6").thresholds("t") == std::vector<std::uint64_t>{3, 4, 5, 6});
  REQUIRE(config("t = geom:1:100:3").thresholds("t") == std::vector<std::uint64_t>{1, 10, 100});
  REQUIRE_THROWS_AS(config("t = 5,2").thresholds("t"), ConfigurationError);
  REQUIRE_THROWS_AS(config("t = 6..3").thresholds("t"), ConfigurationError);
  REQUIRE_THROWS_AS(config("t = x").thresholds("t"), ConfigurationError);
}

TEST_CASE("output formatting", "[cli]") {
  REQUIRE(format_real(0.1) == "0.1");
  REQUIRE(format_real(1.0 / 3) == "0.333333333333");
  REQUIRE(format_real(1e-20) == "1e-20");
  REQUIRE(csv_field("plain") == "plain");
  REQUIRE(csv_field("a,b") == "\"a,b\"");
  REQUIRE(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  REQUIRE(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CsvTable t({"a", "b"});
  t.add_row() << 1 << "x,y";
  REQUIRE(t.text() == "a,b\n1,\"x,y\"\n");
  REQUIRE_THROWS(t.add_row() << 1);
}

TEST_CASE("tail runs are deterministic across runs and workers", "[cli]") {
  const auto dir = scratch("tail");
  auto run = [&](const std::string& sub, const std::string& workers) {
    auto c = config("kind = tail\nmodel = tree:k=3\np = 0.5\nseed = 7\nreplicates = 20000\nthresholds = 1..100\n"
                    "radius_thresholds = 0..20\nedge_budget = 100000\n");
    c.set("workers", workers);
    c.set("out", (dir / sub).string());
    return run_experiment(c);
  };
  const auto a = run("a", "1"), b = run("b", "1"), c = run("c", "4");
  REQUIRE(a.exit_code == 0);
  REQUIRE(digests(a.body) == digests(b.body));
  REQUIRE(digests(a.body) == digests(c.body));
  REQUIRE(read_file(dir / "a" / "tail.csv") == read_file(dir / "c" / "tail.csv"));
  const auto csv = read_file(dir / "a" / "tail.csv");
  REQUIRE(csv.rfind("statistic,p,threshold,estimate,ci_low,ci_high,replicates,budget\n", 0) == 0);
  // Digests in the manifest match the files written.
  for (const auto& [file, sha] : digests(a.body)) REQUIRE(sha256_hex(read_file(dir / "a" / file)) == sha);
  // The manifest's config re-runs to identical outputs.
  auto again = Config::load((dir / "a" / "manifest.json").string());
  again.set("out", (dir / "d").string());
  REQUIRE(digests(run_experiment(again).body) == digests(a.body));
}

TEST_CASE("configuration errors", "[cli]") {
  const auto dir = scratch("errors");
  auto base = [&](const std::string& text) {
    auto c = config(text);
    c.set("out", dir.string());
    return c;
  };
  REQUIRE_THROWS_AS(run_experiment(base("kind = tail\nmodel = tree:k=3\np = 0.5\n")), ConfigurationError);
  REQUIRE_THROWS_AS(run_experiment(base("kind = tail\nmodel = tree:k=3\np = 0.5\nseed = 1\ncolour = red\n")),
                    ConfigurationError);
  REQUIRE_THROWS_AS(run_experiment(base("kind = tail\nmodel = tree:k=3\np = 1.5\nseed = 1\n")), ConfigurationError);
  REQUIRE_THROWS_AS(run_experiment(base("kind = nothing\nseed = 1\n")), ConfigurationError);
  REQUIRE_THROWS_AS(run_experiment(base("kind = tail\nmodel = treexcycle:k=3,m=4\nepsilon = 0.1\nseed = 1\n")),
                    ConfigurationError);
  REQUIRE_THROWS_AS(run_experiment(base("kind = tail\nmodel = tree:k=3\nepsilon = 0.1\np_c = 0.5\nseed = 1\n")),
                    ConfigurationError);
  REQUIRE_THROWS_AS(run_experiment(base("kind = tail\nmodel = tree:k=3\nseed = 1\n")), ConfigurationError);
}

TEST_CASE("estimator errors land in the manifest", "[cli]") {
  const auto dir = scratch("window");
  auto c = config("kind = zeta\nmodel = tree:k=3\np = 0.5\nseed = 1\nreplicates = 1000\nthresholds = 1..50\n");
  c.set("out", dir.string());
  const auto r = run_experiment(c);
  REQUIRE(r.exit_code == kExitEstimator);
  REQUIRE(r.body["errors"].size() == 1);
  REQUIRE(r.body["errors"][0]["type"] == "window");
  REQUIRE(fs::exists(dir / "manifest.json"));

  auto b = config("kind = tail\nmodel = tree:k=3\np = 0.4\nseed = 1\nreplicates = 100\nthresholds = 1..100\n"
                  "edge_budget = 1000\n");
  b.set("out", dir.string());
  const auto rb = run_experiment(b);
  REQUIRE(rb.exit_code == kExitEstimator);
  REQUIRE(rb.body["errors"][0]["type"] == "budget");
}

TEST_CASE("lattice results are labelled as a control", "[cli]") {
  const auto dir = scratch("control");
  auto c = config("kind = tail\nmodel = lattice:d=2\np = 0.3\nseed = 1\nreplicates = 2000\nthresholds = 1..20\n"
                  "radius_thresholds = 0..5\n");
  c.set("out", dir.string());
  const auto r = run_experiment(c);
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.body["control"] == true);
}

TEST_CASE("Russo instances and check", "[cli]") {
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto inst = random_russo_instance(1, i, 10);
    REQUIRE(inst.graph.edges.size() <= 10);
    REQUIRE_NOTHROW(decompose(inst.graph));
  }
  const auto rows = russo_check(50, 10, {0.2, 0.5, 0.8}, 1);
  REQUIRE(rows.size() == 150);
  for (const auto& r : rows) REQUIRE(std::fabs(r.residual) < kRussoTolerance);
}

TEST_CASE("command line", "[cli]") {
  const auto dir = scratch("shell");
  const auto out = (dir / "russo").string();
  auto r = shell("russo-check --edges 10 --trials 50 --seed 1 --out " + out, dir);
  REQUIRE(r.code == 0);
  REQUIRE(fs::exists(fs::path(out) / "russo.csv"));

  REQUIRE(shell("russo-check --edges 10 --trials 5", dir).code == kExitConfig);
  REQUIRE(shell("tail --seed 1 --model tree:k=3 --p 2 --out " + out, dir).code == kExitConfig);

  std::ofstream(dir / "bad.cfg") << "kind = tail\nmodel = tree:k=3\np 0.5\n";
  r = shell("run " + (dir / "bad.cfg").string(), dir);
  REQUIRE(r.code == kExitConfig);
  REQUIRE(r.err.find("bad.cfg:3") != std::string::npos);

  std::ofstream(dir / "zeta.cfg") << "kind = zeta\nmodel = tree:k=3\np = 0.5\nseed = 1\nreplicates = 100\n"
                                  << "thresholds = 1..20\nout = " << (dir / "zeta").string() << "\n";
  REQUIRE(shell("run " + (dir / "zeta.cfg").string(), dir).code == kExitEstimator);

  // Flags override the file; --seed on the subcommand path.
  r = shell("run " + (dir / "zeta.cfg").string() + " --seed 2 --workers 2", dir);
  REQUIRE(r.code == kExitEstimator);
  REQUIRE(read_file(dir / "zeta" / "manifest.json").find("\"seed\": \"2\"") != std::string::npos);
}
