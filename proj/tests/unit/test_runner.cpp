#include <doctest.h>

#include <cstdlib>
#include <string>

#include "hardbench/io.hpp"
#include "hardbench/runner.hpp"
#include "test_support.hpp"

using namespace hardbench;
namespace fs = std::filesystem;

namespace {

SetupSpec small_setup() {
  SetupSpec s = setup_from_config(parse_config("n=200\nk=3\nepochs=4\nhidden=16\nmethods=loss,aum,el2n\n"));
  return s;
}

SweepSpec small_sweep() {
  ConfigMap c = parse_config(
      "n=200\nk=3\nepochs=4\nhidden=16\nmethods=loss,aum,el2n,random\nhardness=mislabel_uniform,far_ood\n"
      "p=0.1,0.2\nseeds=0,1\n");
  return sweep_from_config(c);
}

std::string cli() {
  const char* path = std::getenv("HARDBENCH_CLI");
  REQUIRE(path != nullptr);
  return path;
}

int run_cli(const std::string& args) {
  const int status = std::system((cli() + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("setup ids and seeds") {
  SetupSpec s = small_setup();
  CHECK(s.setup_id() == "blobs-n200-d2-k3-sep8__mislabel_uniform__p0.1__s0");
  const SetupSeeds a = derive_setup_seeds(s);
  s.p = 0.2;
  const SetupSeeds b = derive_setup_seeds(s);
  CHECK(a.dataset == b.dataset);
  CHECK(a.hardness != b.hardness);
  CHECK(a.model != a.train);
}

TEST_CASE("default output directory honours the environment") {
  ::unsetenv(kOutputEnvVar);
  CHECK(default_output_dir() == fs::path("hardbench-out"));
  ::setenv(kOutputEnvVar, "/tmp/elsewhere", 1);
  CHECK(default_output_dir() == fs::path("/tmp/elsewhere"));
  ::unsetenv(kOutputEnvVar);
}

TEST_CASE("run_setup writes a manifest, scores and metrics") {
  const auto dir = testing::scratch_dir("run-setup");
  const SetupSpec s = small_setup();
  const SetupOutcome o = run_setup(s, dir);
  REQUIRE(o.status == SetupStatus::kOk);
  REQUIRE(o.report.has_value());
  CHECK(o.report->methods.size() == 3);
  const fs::path sd = dir / "setups" / s.setup_id();
  CHECK(fs::exists(sd / "manifest.json"));
  CHECK(fs::exists(sd / "scores.csv"));
  CHECK(io::read_file(sd / "metrics.csv").rfind(kMetricsCsvHeader, 0) == 0);

  // Rerunning from the persisted manifest reproduces the metrics bytes.
  const auto again = testing::scratch_dir("run-setup-again");
  const SetupSpec re = setup_from_config(config_from_manifest(sd / "manifest.json"));
  CHECK(re.setup_id() == s.setup_id());
  run_setup(re, again);
  CHECK(io::read_file(again / "setups" / s.setup_id() / "metrics.csv") == io::read_file(sd / "metrics.csv"));
}

TEST_CASE("p = 0 is recorded as skipped") {
  SetupSpec s = small_setup();
  s.p = 0.0;
  const SetupOutcome o = run_setup(s);
  CHECK(o.status == SetupStatus::kSkipped);
  CHECK(o.reason.find("no hard samples") != std::string::npos);
}

TEST_CASE("stage failures are captured") {
  SetupSpec s = small_setup();
  s.hardness = "atypical_zoom";
  const SetupOutcome o = run_setup(s);
  CHECK(o.status == SetupStatus::kFailed);
  CHECK(o.reason.find("grid") != std::string::npos);
}

TEST_CASE("stability with identical seeds is perfectly correlated") {
  SetupSpec s = small_setup();
  const StabilityOutcome o = run_stability(s, std::vector<std::uint64_t>{5, 5});
  for (const auto& rho : o.report.mean_rho) {
    REQUIRE(rho.has_value());
    CHECK(*rho == doctest::Approx(1.0));
  }
  const auto dir = testing::scratch_dir("stability");
  write_stability(o, dir);
  CHECK(fs::exists(dir / "stability.csv"));
  CHECK(fs::exists(dir / "stability.json"));
}

TEST_CASE("config round trip") {
  const SweepSpec s = small_sweep();
  const SweepSpec back = sweep_from_config(config_from_sweep(s));
  CHECK(config_from_sweep(back) == config_from_sweep(s));
  CHECK(s.expand().size() == 8);
  const SetupSpec one = small_setup();
  CHECK(config_from_setup(setup_from_config(config_from_setup(one))) == config_from_setup(one));
  CHECK_THROWS_AS(setup_from_config(parse_config("bogus=1")), std::invalid_argument);
  CHECK(default_p_grid("far_ood").size() == 5);
  CHECK(default_p_grid("mislabel_uniform") == std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5});
}

TEST_CASE("a one-setup sweep equals run_setup") {
  SweepSpec s = small_sweep();
  s.kinds = {"mislabel_uniform"};
  s.p_values = {0.1};
  s.seeds = {0};
  const auto dir = testing::scratch_dir("sweep-one");
  const SweepResult r = sweep(s, dir);
  REQUIRE(r.outcomes.size() == 1);
  const auto solo = testing::scratch_dir("sweep-one-solo");
  const SetupSpec spec = s.expand().front();
  run_setup(spec, solo);
  const std::string id = spec.setup_id();
  CHECK(io::read_file(dir / "setups" / id / "metrics.csv") == io::read_file(solo / "setups" / id / "metrics.csv"));
  CHECK(io::read_file(dir / "metrics.csv") == io::read_file(solo / "setups" / id / "metrics.csv"));
}

TEST_CASE("sweep output does not depend on the job count") {
  SweepSpec s = small_sweep();
  s.jobs = 1;
  const auto a = testing::scratch_dir("sweep-j1");
  sweep(s, a);
  s.jobs = 4;
  const auto b = testing::scratch_dir("sweep-j4");
  sweep(s, b);
  for (const char* f : {"metrics.csv", "setups.csv", "heatmap_far_ood_auprc.csv", "heatmap_mislabel_uniform_auroc.csv",
                        "significance.json", "wins.csv"})
    CHECK_MESSAGE(io::read_file(a / f) == io::read_file(b / f), f);

  emit_report(a);
  const std::string md = io::read_file(a / "report.md");
  const std::string svg = io::read_file(a / "heatmap_far_ood.svg");
  emit_report(a);
  CHECK(io::read_file(a / "report.md") == md);
  CHECK(io::read_file(a / "heatmap_far_ood.svg") == svg);
  CHECK(md.find("far_ood") != std::string::npos);
}

TEST_CASE("missing heatmap cells are hatched in the report") {
  const auto dir = testing::scratch_dir("report-missing");
  io::write_file_atomic(dir / "heatmap_far_ood_auprc.csv", "method,0.1,0.2\nloss,0.5,NA\n");
  emit_report(dir);
  const std::string svg = io::read_file(dir / "heatmap_far_ood.svg");
  CHECK(svg.find("url(#missing)") != std::string::npos);
  CHECK(svg.find(">0.500<") != std::string::npos);
  CHECK_THROWS(emit_report(testing::scratch_dir("report-empty")));
}

TEST_CASE("cli exit codes") {
  const auto dir = testing::scratch_dir("cli");
  const std::string common = " --set n=150 --set k=3 --set epochs=3 --set hidden=8 --methods loss,aum";
  CHECK(run_cli("run --out " + dir.string() + common) == 0);
  CHECK(run_cli("run --out " + dir.string() + common + " --p 0") == 0);
  CHECK(run_cli("run --out " + dir.string() + common + " --hardness atypical_zoom") == 1);
  CHECK(run_cli("run --out " + dir.string() + " --set bogus=1") == 1);
  CHECK(run_cli("nonsense") == 1);
  CHECK(run_cli("sweep --out " + (dir / "sw").string() + common +
                " --hardness mislabel_uniform,atypical_zoom --p 0.1 --set seeds=0") == 2);
  CHECK(run_cli("sweep --out " + (dir / "ok").string() + common + " --hardness far_ood --p 0.1 --set seeds=0,1") == 0);
  CHECK(run_cli("report " + (dir / "ok").string()) == 0);
  CHECK(fs::exists(dir / "ok" / "report.md"));
  CHECK(run_cli("sweep --manifest " + (dir / "ok" / "sweep_manifest.json").string() + " --out " +
                (dir / "ok2").string()) == 0);
  CHECK(io::read_file(dir / "ok" / "metrics.csv") == io::read_file(dir / "ok2" / "metrics.csv"));
  CHECK(run_cli("generate --out " + (dir / "gen").string() + " --set n=30") == 0);
  CHECK(fs::exists(dir / "gen" / "dataset.csv"));
  CHECK(run_cli("perturb --out " + (dir / "pert").string() + " --set n=30 --hardness far_ood --p 0.2") == 0);
  CHECK(fs::exists(dir / "pert" / "flags.csv"));
}
