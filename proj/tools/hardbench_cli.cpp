// hardbench command line: generate, perturb, run, stability, sweep, report.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hardbench/io.hpp"
#include "hardbench/runner.hpp"

namespace fs = std::filesystem;
using namespace hardbench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitPartial = 2;

struct CommonOptions {
  std::string config;
  std::string manifest;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string p;
  std::string hardness;
  std::string methods;
  std::optional<std::size_t> jobs;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_manifest) {
  cmd->add_option("--config", o.config, "key=value configuration file")->check(CLI::ExistingFile);
  if (with_manifest)
    cmd->add_option("--manifest", o.manifest, "rerun from a persisted manifest.json")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory (default: $HARDBENCH_OUT or ./hardbench-out)");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--p", o.p, "comma-separated hardness proportions");
  cmd->add_option("--hardness", o.hardness, "comma-separated hardness kinds; '+' joins composite steps");
  cmd->add_option("--methods", o.methods, "comma-separated methods");
  cmd->add_option("--jobs", o.jobs, "parallel setups for sweep");
  cmd->add_option("--set", o.sets, "extra key=value override (repeatable)");
}

// Later sources win: manifest, config file, --set, dedicated flags.
ConfigMap resolve_config(const CommonOptions& o) {
  ConfigMap c;
  if (!o.manifest.empty()) c = config_from_manifest(o.manifest);
  if (!o.config.empty())
    for (const auto& [k, v] : load_config(o.config)) c[k] = v;
  for (const auto& kv : o.sets)
    for (const auto& [k, v] : parse_config(kv)) c[k] = v;
  if (o.seed) c["seed"] = std::to_string(*o.seed);
  if (!o.p.empty()) c["p"] = o.p;
  if (!o.hardness.empty()) c["hardness"] = o.hardness;
  if (!o.methods.empty()) c["methods"] = o.methods;
  if (o.jobs) c["jobs"] = std::to_string(*o.jobs);
  return c;
}

fs::path out_dir(const CommonOptions& o) { return o.out.empty() ? default_output_dir() : fs::path(o.out); }

// Setup-level commands ignore sweep-only keys.
ConfigMap setup_keys(ConfigMap c) {
  c.erase("jobs");
  c.erase("runs");
  c.erase("run_seeds");
  if (c.count("seeds")) {
    if (!c.count("replicate")) {
      const auto seeds = parse_u64_list(c["seeds"]);
      if (!seeds.empty()) c["replicate"] = std::to_string(seeds.front());
    }
    c.erase("seeds");
  }
  return c;
}

int cmd_generate(const CommonOptions& o) {
  const SetupSpec spec = setup_from_config(setup_keys(resolve_config(o)));
  const Dataset ds = build_dataset(spec.dataset, derive_setup_seeds(spec).dataset);
  const fs::path path = out_dir(o) / "dataset.csv";
  write_csv(ds, path);
  std::cout << "wrote " << path.string() << " (" << ds.size() << " rows, " << ds.dims() << " features, "
            << ds.num_classes << " classes)\n";
  return kExitOk;
}

int cmd_perturb(const CommonOptions& o) {
  const SetupSpec spec = setup_from_config(setup_keys(resolve_config(o)));
  const SetupSeeds seeds = derive_setup_seeds(spec);
  const Dataset ds = build_dataset(spec.dataset, seeds.dataset);
  const PerturbationResult r = perturb(ds, HardnessSpec{parse_hardness(spec.hardness, spec.params), spec.p, seeds.hardness});
  const fs::path dir = out_dir(o);
  write_csv(r.data, dir / "perturbed.csv");
  std::string flags = "sample_id,hardness_flag\n";
  for (std::size_t i = 0; i < r.flags.flags.size(); ++i) flags += std::to_string(i) + "," + (r.flags.flags[i] ? "1\n" : "0\n");
  io::write_file_atomic(dir / "flags.csv", flags);
  nlohmann::ordered_json j;
  j["hardness"] = spec.hardness;
  j["p"] = spec.p;
  j["seed"] = seeds.hardness;
  j["flag_count"] = r.flags.count;
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const auto& s : r.steps) {
    steps.push_back({{"kind", s.kind}, {"seed", s.seed}, {"warnings", s.warnings}});
    for (const auto& w : s.warnings) std::cerr << "warning: " << s.kind << ": " << w << "\n";
  }
  j["steps"] = steps;
  io::write_file_atomic(dir / "perturbation.json", j.dump(2) + "\n");
  std::cout << "flagged " << r.flags.count << " of " << r.flags.flags.size() << " samples; wrote " << dir.string() << "\n";
  return kExitOk;
}

int cmd_run(const CommonOptions& o) {
  const SetupSpec spec = setup_from_config(setup_keys(resolve_config(o)));
  const SetupOutcome outcome = run_setup(spec, out_dir(o));
  const fs::path dir = out_dir(o) / "setups" / outcome.descriptor.setup_id;
  switch (outcome.status) {
    case SetupStatus::kFailed:
      std::cerr << "error: " << outcome.descriptor.setup_id << ": " << outcome.reason << "\n";
      return kExitError;
    case SetupStatus::kSkipped:
      std::cout << outcome.descriptor.setup_id << " skipped: " << outcome.reason << "\n";
      return kExitOk;
    case SetupStatus::kOk:
      break;
  }
  std::printf("%-22s %8s %8s %6s\n", "method", "d_auprc", "d_auroc", "rank");
  for (const auto& m : outcome.report->methods)
    std::printf("%-22s %8.4f %8.4f %6.1f\n", std::string(method_name(m.method)).c_str(), m.d_auprc, m.d_auroc, m.rank);
  std::cout << "wrote " << dir.string() << "\n";
  return kExitOk;
}

int cmd_stability(const CommonOptions& o, std::size_t runs, const std::string& run_seeds) {
  const ConfigMap c = resolve_config(o);
  const SetupSpec spec = setup_from_config(setup_keys(c));
  const std::string seeds_text = !run_seeds.empty() ? run_seeds : config_string(c, "run_seeds", "");
  const StabilityOutcome outcome = seeds_text.empty()
                                       ? run_stability(spec, runs ? runs : config_size(c, "runs", 3))
                                       : run_stability(spec, parse_u64_list(seeds_text));
  write_stability(outcome, out_dir(o));
  std::printf("%-22s %10s\n", "method", "mean_rho");
  for (std::size_t m = 0; m < outcome.report.methods.size(); ++m) {
    const auto& rho = outcome.report.mean_rho[m];
    const std::string name(method_name(outcome.report.methods[m]));
    if (rho)
      std::printf("%-22s %10.4f\n", name.c_str(), *rho);
    else
      std::printf("%-22s %10s\n", name.c_str(), "undefined");
  }
  return kExitOk;
}

int cmd_sweep(const CommonOptions& o) {
  const SweepSpec spec = sweep_from_config(resolve_config(o));
  const fs::path dir = out_dir(o);
  const SweepResult r = sweep(spec, dir);
  const std::size_t ok = r.outcomes.size() - r.failed - r.skipped;
  std::cout << r.outcomes.size() << " setups: " << ok << " ok, " << r.skipped << " skipped, " << r.failed
            << " failed; wrote " << dir.string() << "\n";
  for (const auto& outcome : r.outcomes)
    if (outcome.status == SetupStatus::kFailed)
      std::cerr << "failed: " << outcome.descriptor.setup_id << ": " << outcome.reason << "\n";
  return r.failed > 0 ? kExitPartial : kExitOk;
}

int cmd_report(const std::string& dir_arg, const CommonOptions& o) {
  const fs::path dir = dir_arg.empty() ? out_dir(o) : fs::path(dir_arg);
  emit_report(dir);
  std::cout << "wrote " << (dir / "report.md").string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hardbench: benchmark hardness characterization methods on synthetic and tabular data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOptions gen_o, pert_o, run_o, stab_o, sweep_o, report_o;
  auto* gen = app.add_subcommand("generate", "write the configured dataset as CSV");
  add_common(gen, gen_o, false);
  auto* pert = app.add_subcommand("perturb", "apply a hardness perturbation and write data plus flags");
  add_common(pert, pert_o, false);
  auto* run = app.add_subcommand("run", "run one setup: perturb, train, score, evaluate");
  add_common(run, run_o, true);
  auto* stab = app.add_subcommand("stability", "Spearman stability of scores across model seeds");
  add_common(stab, stab_o, false);
  std::size_t runs = 0;
  std::string run_seeds;
  stab->add_option("--runs", runs, "number of training runs (default 3)");
  stab->add_option("--run-seeds", run_seeds, "explicit comma-separated run seeds");
  auto* sw = app.add_subcommand("sweep", "run the hardness x p x seed grid and aggregate");
  add_common(sw, sweep_o, true);
  auto* rep = app.add_subcommand("report", "render report.md and SVG heatmaps from a sweep directory");
  add_common(rep, report_o, false);
  std::string report_dir;
  rep->add_option("dir", report_dir, "sweep output directory (default: --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*gen) return cmd_generate(gen_o);
    if (*pert) return cmd_perturb(pert_o);
    if (*run) return cmd_run(run_o);
    if (*stab) return cmd_stability(stab_o, runs, run_seeds);
    if (*sw) return cmd_sweep(sweep_o);
    if (*rep) return cmd_report(report_dir, report_o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
