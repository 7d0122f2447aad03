#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "btc/scenario.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace btc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("btc_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(BTC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ScenarioConfig small(const fs::path& out) {
  return parse_config_text(
      "label = small\n"
      "n_spins = 4\n"
      "omega0 = 40\n"
      "t_end = 3 T0   # short\n"
      "sample_every = 20\n"
      "methods = exact, srwa, mft1, cumulant2\n"
      "analyses = fidelity, meanfield_error\n"
      "output = " + out.string() + "\n");
}

}  // namespace

TEST_CASE("configuration parsing") {
  const ScenarioConfig c = small("/tmp/x");
  CHECK(c.n_spins == 4);
  CHECK(c.methods.size() == 4);
  CHECK(c.t_end.value == 3.0);
  CHECK(c.t_end.unit == TimeUnit::periods);
  CHECK(c.dt() == doctest::Approx(2 * kPi / 40 / 200));
  CHECK_NOTHROW(c.validate());

  const TaggedTime k = parse_tagged_time("12.5 1/kappa", "t_end");
  CHECK(k.unit == TimeUnit::inverse_kappa);
  ModelParams p;
  p.kappa = 2.0;
  CHECK(k.resolve(p) == doctest::Approx(6.25));
  CHECK(parse_tagged_time("400T0", "t_end").value == 400.0);
  CHECK_THROWS_AS(parse_tagged_time("400", "t_end"), ConfigError);

  CHECK_THROWS_AS(parse_config_text("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("n_spins = 2.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("n_spins 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("methods = exact, magic\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("omega0 = fast\n"), ConfigError);

  ScenarioConfig bad = c;
  bad.steps_per_period = 20;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.analyses = {"spectrum"};
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  ScenarioConfig o = c;
  apply_overrides(o, {"n_spins=6", "methods=exact"});
  CHECK(o.n_spins == 6);
  CHECK(o.methods.size() == 1);
  CHECK_THROWS_AS(apply_overrides(o, {"n_spins"}), ConfigError);

  // round trip through the flat form
  std::string text;
  for (const auto& [key, value] : c.as_map()) text += key + " = " + value + "\n";
  CHECK(parse_config_text(text).as_map() == c.as_map());
}

TEST_CASE("initial states") {
  const SpinBasis b(3);
  CHECK(make_initial_state(b, "all_down").matrix == spin_coherent_down(b).matrix);
  const DensityMatrix flip = make_initial_state(b, "coherent:3.141592653589793,0");
  CHECK(expectation(b.sz(), flip.matrix).real() == doctest::Approx(1.5));
  CHECK_THROWS_AS(make_initial_state(b, "coherent:1"), ConfigError);
  CHECK_THROWS_AS(make_initial_state(b, "thermal"), ConfigError);

  const fs::path dir = scratch("state");
  fs::create_directories(dir);
  std::ofstream(dir / "ok.txt") << "0.5 0 0 0 0 0 0 0\n0 0 0.5 0 0 0 0 0\n0 0 0 0 0 0 0 0\n0 0 0 0 0 0 0 0\n";
  const DensityMatrix loaded = make_initial_state(b, "state:" + (dir / "ok.txt").string());
  CHECK(loaded.matrix(1, 1).real() == 0.5);
  std::ofstream(dir / "neg.txt") << "1.5 0 0 0 0 0 0 0\n0 0 -0.5 0 0 0 0 0\n0 0 0 0 0 0 0 0\n0 0 0 0 0 0 0 0\n";
  CHECK_THROWS_AS(make_initial_state(b, "state:" + (dir / "neg.txt").string()), ConfigError);
  CHECK_THROWS_AS(make_initial_state(b, "state:" + (dir / "missing.txt").string()), ConfigError);
}

TEST_CASE("CSV rows and digests") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  MomentRecord m;
  m.sz = -0.1;
  m.purity = 1.0;
  const std::string row = format_csv_row(0.25, {0.0, 0.25, 0}, m);
  CHECK(row.find("-0.10000000000000001") != std::string::npos);
  CHECK(std::count(row.begin(), row.end(), ',') == 11);
}

TEST_CASE("scenario run output") {
  const fs::path out = scratch("run");
  const RunResult r = run_scenario(small(out));
  for (const char* name : {"small_exact.csv", "small_srwa.csv", "small_mft1.csv", "small_cumulant2.csv",
                           "small_fidelity.csv", "small_manifest.json"}) {
    CHECK(fs::exists(out / name));
  }
  const std::string exact = slurp(out / "small_exact.csv");
  CHECK(exact.substr(0, exact.find('\n')) == kCsvHeader);
  // 3 periods x 200 steps, every 20th step, plus t = 0
  CHECK(std::count(exact.begin(), exact.end(), '\n') == 1 + 31);

  const auto manifest = nlohmann::json::parse(slurp(out / "small_manifest.json"));
  CHECK(manifest["version"] == kToolVersion);
  CHECK(manifest["config"]["n_spins"] == "4");
  CHECK(manifest["files"].size() + 1 == r.files.size());
  for (const auto& f : manifest["files"]) {
    CHECK(sha256_hex(slurp(out / f["name"].get<std::string>())) == f["sha256"].get<std::string>());
  }
  for (const auto& o : manifest["oracle"]) {
    if (o["gate"].get<bool>()) CHECK(o["value"].get<double>() < o["tolerance"].get<double>());
  }

  // byte-identical rerun
  const fs::path again = scratch("run2");
  run_scenario(small(again));
  for (const auto& entry : fs::directory_iterator(out)) {
    const std::string name = entry.path().filename().string();
    if (name.ends_with(".csv")) CHECK(slurp(entry.path()) == slurp(again / name));
  }
  CHECK(slurp(out / "small_manifest.json").size() > 0);
}

TEST_CASE("invalid runs write nothing") {
  const fs::path out = scratch("empty");
  ScenarioConfig c = small(out);
  c.methods.clear();
  CHECK_THROWS_AS(run_scenario(c), ConfigError);
  CHECK(!fs::exists(out));
  c = small(out);
  c.methods = {Method::srwa};
  CHECK_THROWS_AS(run_scenario(c), ConfigError);  // fidelity needs exact
  CHECK(!fs::exists(out));
  c = small(out);
  c.n_spins = 81;
  c.methods = {Method::exact};
  c.analyses.clear();
  CHECK_THROWS_AS(run_scenario(c), MemoryGuardError);
}

TEST_CASE("oracle report") {
  const auto deltas = oracle_report();
  int gated = 0, reported = 0;
  for (const auto& d : deltas) {
    if (d.gate) {
      ++gated;
      CHECK_MESSAGE(d.pass(), d.name << " = " << d.value);
    } else {
      ++reported;
      CHECK(d.value > 1e-3);  // the literal G(s) weights are detectably off
    }
  }
  CHECK(gated >= 12);
  CHECK(reported >= 1);
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = scratch("cli");
  fs::create_directories(dir);
  CHECK(cli("validate") == 0);
  CHECK(cli("steady-state --n-spins 3 --ratios 40 80") == 0);
  CHECK(cli("run n_spins=3 t_end=1T0 output=" + (dir / "a").string()) == 0);
  CHECK(fs::exists(dir / "a" / "run_exact.csv"));
  CHECK(cli("run n_spins=3 t_end=1 output=" + (dir / "b").string()) == 1);
  CHECK(cli("run methods= output=" + (dir / "b").string()) == 1);
  CHECK(cli("run n_spins=0 output=" + (dir / "b").string()) == 1);
  CHECK(cli("figure fig9") == 1);
  CHECK(cli("nonsense") == 1);
  CHECK(cli("run n_spins=6 omega0=1 t_end=3T0 methods=srwa srwa_positivity_tolerance=1e-6 output=" +
            (dir / "c").string()) == 2);
}

TEST_CASE("figure smoke run") {
  const fs::path out = scratch("fig1");
  const auto start = std::chrono::steady_clock::now();
  const RunResult r = reproduce_figure(Figure::fig1, out, true);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("fig1 smoke: " << secs << " s");
  CHECK(secs < 60.0);
  int trajectories = 0;
  for (const auto& f : r.files) {
    for (const char* n : {"40", "80"})
      for (const char* m : {"exact", "srwa", "cumulant2"})
        if (f.name == std::string("fig1_N") + n + "_" + m + ".csv") ++trajectories;
  }
  CHECK(trajectories == 6);
  CHECK(fs::exists(out / "plot_fig1.py"));
  CHECK(fs::exists(out / "manifest.json"));
}
