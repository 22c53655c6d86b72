#include "hardbench/runner.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdlib>
#include <stdexcept>

#include "json.hpp"

#include "hardbench/io.hpp"
#include "hardbench/rng.hpp"

namespace hardbench {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? std::string(sep) : "") + items[i];
  return out;
}

template <typename T, typename F>
std::string join_map(const std::vector<T>& items, F&& fmt) {
  std::vector<std::string> s;
  for (const auto& x : items) s.push_back(fmt(x));
  return join(s);
}

std::string method_list(const std::vector<Method>& methods) {
  return join_map(methods, [](Method m) { return std::string(method_name(m)); });
}

std::uint64_t p_bits(double p) { return std::bit_cast<std::uint64_t>(p); }

std::string layout_name(CenterLayout l) { return l == CenterLayout::kLine ? "line" : "scattered"; }

CenterLayout parse_layout(const std::string& s) {
  if (s == "scattered") return CenterLayout::kScattered;
  if (s == "line") return CenterLayout::kLine;
  throw std::invalid_argument("layout: expected scattered or line, got '" + s + "'");
}

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

RecordOptions record_options_for(const SetupSpec& spec) {
  RecordOptions r = spec.record;
  const auto has = [&](Method m) { return std::find(spec.methods.begin(), spec.methods.end(), m) != spec.methods.end(); };
  r.grad_norms = r.grad_norms && has(Method::kGrand);
  r.input_grads = r.input_grads && has(Method::kVog);
  return r;
}

SetupDescriptor describe(const SetupSpec& spec) {
  std::string model = "mlp";
  for (const auto w : spec.model.hidden_sizes) model += "-" + std::to_string(w);
  model += "-dropout" + io::format_double(spec.model.dropout_rate);
  return {spec.setup_id(), spec.dataset.label(), spec.hardness, spec.p, spec.replicate, model};
}

std::string scores_csv(const std::vector<ScoreVector>& scores, const FlagSet& flags) {
  std::string out = "sample_id,method,raw_score,oriented_score,hardness_flag\n";
  for (const auto& s : scores)
    for (std::size_t i = 0; i < s.raw.size(); ++i)
      out += std::to_string(i) + "," + std::string(method_name(s.method)) + "," + io::format_double(s.raw[i]) + "," +
             io::format_double(s.oriented[i]) + "," + (flags.flags[i] ? "1" : "0") + "\n";
  return out;
}

ordered_json matrix_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

ordered_json config_json(const ConfigMap& c) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : c) j[k] = v;
  return j;
}

void write_setup_artifacts(const SetupSpec& spec, const SetupSeeds& seeds, const SetupOutcome& o,
                           const std::vector<StepRecord>& steps, const fs::path& dir) {
  ordered_json j;
  j["version"] = kVersion;
  j["setup_id"] = o.descriptor.setup_id;
  j["status"] = status_name(o.status);
  if (!o.reason.empty()) j["reason"] = o.reason;
  j["master_seed"] = spec.master_seed;
  j["config"] = config_json(config_from_setup(spec));
  j["seeds"] = {{"dataset", seeds.dataset}, {"hardness", seeds.hardness}, {"model", seeds.model},
                {"train", seeds.train},     {"scorer", seeds.scorer}};
  j["dataset"] = {{"label", o.descriptor.dataset}, {"source", spec.dataset.source}};
  ordered_json hardness;
  hardness["name"] = spec.hardness;
  hardness["p"] = spec.p;
  hardness["flag_count"] = o.flags.count;
  hardness["flags"] = o.flags.indices();
  ordered_json step_list = ordered_json::array();
  for (const auto& s : steps) {
    ordered_json sj;
    sj["kind"] = s.kind;
    sj["seed"] = s.seed;
    if (s.transition) sj["transition"] = matrix_json(*s.transition);
    if (s.rules) {
      ordered_json rules = ordered_json::array();
      for (const auto& row : s.rules->rows) {
        ordered_json r = ordered_json::array();
        for (const auto& [cls, prob] : row) r.push_back({cls, prob});
        rules.push_back(r);
      }
      sj["rules"] = rules;
    }
    if (s.tail_feature) sj["tail_feature"] = *s.tail_feature;
    sj["warnings"] = s.warnings;
    step_list.push_back(sj);
  }
  hardness["steps"] = step_list;
  j["hardness"] = hardness;
  j["model"] = {{"hidden_sizes", spec.model.hidden_sizes}, {"dropout_rate", spec.model.dropout_rate}};
  j["train"] = {{"epochs", spec.train.epochs},       {"learning_rate", spec.train.learning_rate},
                {"batch_size", spec.train.batch_size}, {"beta1", spec.train.beta1},
                {"beta2", spec.train.beta2},         {"epsilon", spec.train.epsilon}};
  std::vector<std::string> names;
  for (const Method m : spec.methods) names.emplace_back(method_name(m));
  j["methods"] = names;
  if (o.detector_calibration_auroc) j["detector_calibration_auroc"] = *o.detector_calibration_auroc;
  ordered_json outputs = {{"manifest", "manifest.json"}};
  if (o.status == SetupStatus::kOk) {
    outputs["scores"] = "scores.csv";
    outputs["metrics"] = "metrics.csv";
  }
  j["outputs"] = outputs;
  j["stage_seconds"] = o.stage_seconds;

  if (o.status == SetupStatus::kOk) {
    io::write_file_atomic(dir / "scores.csv", scores_csv(o.scores, o.flags));
    io::write_file_atomic(dir / "metrics.csv",
                          std::string(kMetricsCsvHeader) + metrics_csv_rows(std::span(&*o.report, 1)));
  }
  io::write_file_atomic(dir / "manifest.json", j.dump(2) + "\n");
}

void check_known_keys(const ConfigMap& config) {
  const auto& keys = config_keys();
  for (const auto& [k, v] : config)
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw std::invalid_argument("unknown config key '" + k + "'");
}

}  // namespace

fs::path default_output_dir() {
  const char* env = std::getenv(kOutputEnvVar);
  return env && *env ? fs::path(env) : fs::path("hardbench-out");
}

std::string DatasetSpec::label() const {
  if (source == "blobs")
    return "blobs-n" + std::to_string(n) + "-d" + std::to_string(d) + "-k" + std::to_string(k) + "-sep" +
           io::format_double(separation) + (layout == CenterLayout::kLine ? "-line" : "");
  if (source == "glyphs")
    return "glyphs-n" + std::to_string(n) + "-" + std::to_string(grid_height) + "x" + std::to_string(grid_width) +
           "-k" + std::to_string(k);
  if (source == "csv") return "csv-" + csv_path.stem().string();
  throw std::invalid_argument("unknown dataset source '" + source + "'");
}

Dataset build_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  Dataset ds;
  if (spec.source == "blobs")
    ds = generate_blobs(spec.n, spec.d, spec.k, spec.separation, seed, spec.layout);
  else if (spec.source == "glyphs")
    ds = generate_glyphs(spec.n, GridShape{spec.grid_height, spec.grid_width}, spec.k, spec.noise, seed);
  else if (spec.source == "csv")
    ds = load_csv(spec.csv_path, spec.target);
  else
    throw std::invalid_argument("unknown dataset source '" + spec.source + "' (expected blobs, glyphs or csv)");
  return spec.standardize ? standardize(ds) : ds;
}

std::string SetupSpec::setup_id() const {
  return dataset.label() + "__" + hardness + "__p" + io::format_double(p) + "__s" + std::to_string(replicate);
}

SetupSeeds derive_setup_seeds(const SetupSpec& spec) {
  const std::uint64_t kind = hash_name(spec.hardness);
  const std::uint64_t p = p_bits(spec.p);
  const std::uint64_t r = spec.replicate;
  return {derive_seed(spec.master_seed, "dataset", {r}), derive_seed(spec.master_seed, "hardness", {kind, p, r}),
          derive_seed(spec.master_seed, "model", {kind, p, r}), derive_seed(spec.master_seed, "train", {kind, p, r}),
          derive_seed(spec.master_seed, "scorer", {kind, p, r})};
}

std::string_view status_name(SetupStatus s) {
  switch (s) {
    case SetupStatus::kOk: return "ok";
    case SetupStatus::kSkipped: return "skipped";
    case SetupStatus::kFailed: return "failed";
  }
  return "failed";
}

SetupOutcome run_setup(const SetupSpec& spec, const fs::path& out_dir) {
  SetupOutcome o;
  const SetupSeeds seeds = derive_setup_seeds(spec);
  std::vector<StepRecord> steps;
  std::string stage = "config";
  Stopwatch clock;
  try {
    o.descriptor = describe(spec);
    stage = "data";
    const Dataset clean = build_dataset(spec.dataset, seeds.dataset);
    o.stage_seconds["data"] = clock.lap();

    stage = "hardness";
    HardnessSpec hs{parse_hardness(spec.hardness, spec.params), spec.p, seeds.hardness};
    PerturbationResult perturbed = perturb(clean, hs);
    o.flags = perturbed.flags;
    steps = std::move(perturbed.steps);
    o.stage_seconds["hardness"] = clock.lap();

    stage = "evaluate";
    try {
      evaluate(o.descriptor, {}, o.flags);
    } catch (const std::invalid_argument& e) {
      o.status = SetupStatus::kSkipped;
      o.reason = e.what();
    }

    if (o.status == SetupStatus::kOk) {
      stage = "train";
      MlpConfig mc = spec.model;
      mc.seed = seeds.model;
      TrainConfig tc = spec.train;
      tc.seed = seeds.train;
      Mlp model(mc, perturbed.data.dims(), perturbed.data.num_classes);
      const DynamicsRecord dyn = fit_with_recording(model, perturbed.data, tc, record_options_for(spec));
      o.stage_seconds["train"] = clock.lap();

      stage = "score";
      ScoringContext ctx{dyn, model, perturbed.data, mc, tc};
      ScoringOutput scored = compute_scores(ctx, spec.methods, spec.scorer, seeds.scorer);
      o.scores = std::move(scored.scores);
      o.detector_calibration_auroc = scored.detector_calibration_auroc;
      o.stage_seconds["score"] = clock.lap();

      stage = "evaluate";
      o.report = evaluate(o.descriptor, o.scores, o.flags);
      o.stage_seconds["evaluate"] = clock.lap();
    }
  } catch (const std::exception& e) {
    o.status = SetupStatus::kFailed;
    o.reason = stage + ": " + e.what();
    o.report.reset();
  }
  if (o.descriptor.setup_id.empty()) o.descriptor.setup_id = "invalid-setup";
  if (!out_dir.empty()) write_setup_artifacts(spec, seeds, o, steps, out_dir / "setups" / o.descriptor.setup_id);
  return o;
}

StabilityOutcome run_stability(const SetupSpec& spec, const std::vector<std::uint64_t>& run_seeds) {
  if (run_seeds.size() < 2) throw std::invalid_argument("stability needs at least two runs");
  const SetupSeeds seeds = derive_setup_seeds(spec);
  const Dataset clean = build_dataset(spec.dataset, seeds.dataset);
  HardnessSpec hs{parse_hardness(spec.hardness, spec.params), spec.p, seeds.hardness};
  const PerturbationResult perturbed = perturb(clean, hs);

  std::vector<std::vector<ScoreVector>> runs;
  for (const std::uint64_t s : run_seeds) {
    MlpConfig mc = spec.model;
    mc.seed = derive_seed(s, "model");
    TrainConfig tc = spec.train;
    tc.seed = derive_seed(s, "train");
    Mlp model(mc, perturbed.data.dims(), perturbed.data.num_classes);
    const DynamicsRecord dyn = fit_with_recording(model, perturbed.data, tc, record_options_for(spec));
    ScoringContext ctx{dyn, model, perturbed.data, mc, tc};
    runs.push_back(compute_scores(ctx, spec.methods, spec.scorer, derive_seed(s, "scorer")).scores);
  }
  return {stability_from_scores(spec.methods, runs), run_seeds, perturbed.flags};
}

StabilityOutcome run_stability(const SetupSpec& spec, std::size_t runs) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t r = 0; r < runs; ++r) seeds.push_back(derive_seed(spec.master_seed, "stability", {r}));
  return run_stability(spec, seeds);
}

void write_stability(const StabilityOutcome& outcome, const fs::path& out_dir) {
  const auto& rep = outcome.report;
  std::string summary = "method,mean_rho,defined_pairs,total_pairs\n";
  std::string pairs = "method,run_a,run_b,rho\n";
  ordered_json j;
  j["run_seeds"] = outcome.run_seeds;
  ordered_json methods = ordered_json::object();
  for (std::size_t m = 0; m < rep.methods.size(); ++m) {
    const std::string name(method_name(rep.methods[m]));
    std::size_t defined = 0, idx = 0;
    ordered_json pj = ordered_json::array();
    for (std::size_t a = 0; a < rep.runs; ++a)
      for (std::size_t b = a + 1; b < rep.runs; ++b, ++idx) {
        const auto& rho = rep.pair_rho[m][idx];
        defined += rho.has_value();
        pairs += name + "," + std::to_string(a) + "," + std::to_string(b) + "," +
                 (rho ? io::format_double(*rho) : std::string("NA")) + "\n";
        pj.push_back(rho ? ordered_json(*rho) : ordered_json(nullptr));
      }
    const auto& mean = rep.mean_rho[m];
    summary += name + "," + (mean ? io::format_double(*mean) : std::string("NA")) + "," + std::to_string(defined) +
               "," + std::to_string(idx) + "\n";
    methods[name] = {{"mean_rho", mean ? ordered_json(*mean) : ordered_json(nullptr)}, {"pairs", pj}};
  }
  j["methods"] = methods;
  io::write_file_atomic(out_dir / "stability.csv", summary);
  io::write_file_atomic(out_dir / "stability_pairs.csv", pairs);
  io::write_file_atomic(out_dir / "stability.json", j.dump(2) + "\n");
}

std::vector<double> default_p_grid(const std::string& hardness) {
  const bool restricted = hardness.find("far_ood") != std::string::npos || hardness.find("atypical") != std::string::npos;
  if (restricted) return {0.05, 0.1, 0.15, 0.2, 0.25};
  return {0.1, 0.2, 0.3, 0.4, 0.5};
}

std::vector<SetupSpec> SweepSpec::expand() const {
  if (kinds.empty() || seeds.empty()) throw std::invalid_argument("sweep needs at least one hardness kind and seed");
  const std::vector<DatasetSpec> ds = datasets.empty() ? std::vector<DatasetSpec>{base.dataset} : datasets;
  std::vector<SetupSpec> out;
  for (const auto& d : ds)
    for (const auto& kind : kinds) {
      const auto ps = p_values.empty() ? default_p_grid(kind) : p_values;
      for (const double p : ps)
        for (const std::uint64_t s : seeds) {
          SetupSpec spec = base;
          spec.dataset = d;
          spec.hardness = kind;
          spec.p = p;
          spec.replicate = s;
          out.push_back(std::move(spec));
        }
    }
  std::sort(out.begin(), out.end(), [](const SetupSpec& a, const SetupSpec& b) { return a.setup_id() < b.setup_id(); });
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i].setup_id() == out[i - 1].setup_id())
      throw std::invalid_argument("sweep grid repeats setup " + out[i].setup_id());
  return out;
}

SweepResult sweep(const SweepSpec& spec, const fs::path& out_dir) {
  const std::vector<SetupSpec> setups = spec.expand();
  SweepResult result;
  result.outcomes.resize(setups.size());
  const int threads = static_cast<int>(std::max<std::size_t>(spec.jobs, 1));
  const auto count = static_cast<long>(setups.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long i = 0; i < count; ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      result.outcomes[u] = run_setup(setups[u], out_dir);
    } catch (const std::exception& e) {
      result.outcomes[u].descriptor.setup_id = setups[u].setup_id();
      result.outcomes[u].status = SetupStatus::kFailed;
      result.outcomes[u].reason = std::string("output: ") + e.what();
    }
  }

  std::vector<EvalReport> reports;
  std::string status_csv = "setup_id,status,reason\n";
  for (const auto& o : result.outcomes) {
    if (o.status == SetupStatus::kFailed) ++result.failed;
    if (o.status == SetupStatus::kSkipped) ++result.skipped;
    if (o.report) reports.push_back(*o.report);
    status_csv += io::csv_escape(o.descriptor.setup_id) + "," + std::string(status_name(o.status)) + "," +
                  io::csv_escape(o.reason) + "\n";
  }
  io::write_file_atomic(out_dir / "metrics.csv", std::string(kMetricsCsvHeader) + metrics_csv_rows(reports));
  io::write_file_atomic(out_dir / "setups.csv", status_csv);

  for (const auto& kind : spec.kinds) {
    std::vector<EvalReport> of_kind;
    for (const auto& r : reports)
      if (r.setup.hardness == kind) of_kind.push_back(r);
    const auto ps = spec.p_values.empty() ? default_p_grid(kind) : spec.p_values;
    Heatmap h = aggregate_sweep(of_kind, spec.base.methods, ps);
    h.hardness = kind;
    io::write_file_atomic(out_dir / ("heatmap_" + kind + "_auprc.csv"), heatmap_csv(h, h.auprc_mean));
    io::write_file_atomic(out_dir / ("heatmap_" + kind + "_auroc.csv"), heatmap_csv(h, h.auroc_mean));
    io::write_file_atomic(out_dir / ("heatmap_" + kind + "_auprc_std.csv"), heatmap_csv(h, h.auprc_std));
    io::write_file_atomic(out_dir / ("heatmap_" + kind + "_auroc_std.csv"), heatmap_csv(h, h.auroc_std));
  }

  try {
    const SignificanceResult sig = significance(reports, spec.base.methods);
    io::write_file_atomic(out_dir / "significance.json", significance_json(sig));
    std::string wins = "method," + method_list(sig.methods) + "\n";
    for (std::size_t a = 0; a < sig.methods.size(); ++a)
      wins += std::string(method_name(sig.methods[a])) + "," +
              join_map(sig.wins[a], [](std::size_t v) { return std::to_string(v); }) + "\n";
    io::write_file_atomic(out_dir / "wins.csv", wins);
  } catch (const std::invalid_argument& e) {
    ordered_json j = {{"metric", "d_auprc"}, {"error", e.what()}};
    io::write_file_atomic(out_dir / "significance.json", j.dump(2) + "\n");
  }

  ordered_json manifest;
  manifest["version"] = kVersion;
  manifest["config"] = config_json(config_from_sweep(spec));
  std::vector<std::string> ids;
  for (const auto& o : result.outcomes) ids.push_back(o.descriptor.setup_id);
  manifest["setups"] = ids;
  manifest["failed"] = result.failed;
  manifest["skipped"] = result.skipped;
  io::write_file_atomic(out_dir / "sweep_manifest.json", manifest.dump(2) + "\n");
  return result;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "seed",        "dataset",        "n",          "d",           "k",          "sep",
      "layout",      "grid_h",         "grid_w",     "noise",       "csv",        "target",
      "standardize", "hardness",       "p",          "seeds",       "replicate",  "methods",
      "alpha",       "sigma",          "quantile",   "pixels",      "factor",     "hidden",
      "dropout",     "epochs",         "lr",         "batch",       "beta1",      "beta2",
      "eps",         "vog_stride",     "agreement_passes", "cleanlab_folds", "allsh_sigma",
      "detector_rate", "detector_c",   "prototype_distance", "jobs", "runs",      "run_seeds",
  };
  return keys;
}

SetupSpec setup_from_config(const ConfigMap& c) {
  check_known_keys(c);
  SetupSpec s;
  s.master_seed = config_u64(c, "seed", 0);
  auto& d = s.dataset;
  d.source = config_string(c, "dataset", d.source);
  d.n = config_size(c, "n", d.n);
  d.d = config_size(c, "d", d.d);
  d.k = static_cast<int>(config_size(c, "k", static_cast<std::size_t>(d.k)));
  d.separation = config_double(c, "sep", d.separation);
  d.layout = parse_layout(config_string(c, "layout", layout_name(d.layout)));
  d.grid_height = config_size(c, "grid_h", d.grid_height);
  d.grid_width = config_size(c, "grid_w", d.grid_width);
  d.noise = config_double(c, "noise", d.noise);
  d.csv_path = config_string(c, "csv", "");
  d.target = config_string(c, "target", d.target);
  d.standardize = config_bool(c, "standardize", d.standardize);

  const auto kinds = split_list(config_string(c, "hardness", s.hardness));
  if (kinds.size() != 1) throw std::invalid_argument("a single setup needs exactly one hardness kind");
  s.hardness = kinds[0];
  const auto ps = parse_double_list(config_string(c, "p", io::format_double(s.p)));
  if (ps.size() != 1) throw std::invalid_argument("a single setup needs exactly one p value");
  s.p = ps[0];
  s.replicate = config_u64(c, "replicate", 0);
  if (c.count("methods")) s.methods = parse_methods(c.at("methods"));

  s.params.alpha = config_double(c, "alpha", s.params.alpha);
  s.params.sigma = config_double(c, "sigma", s.params.sigma);
  s.params.quantile = config_double(c, "quantile", s.params.quantile);
  s.params.pixels = static_cast<int>(config_size(c, "pixels", static_cast<std::size_t>(s.params.pixels)));
  s.params.factor = config_double(c, "factor", s.params.factor);

  if (c.count("hidden")) s.model.hidden_sizes = parse_size_list(c.at("hidden"));
  s.model.dropout_rate = config_double(c, "dropout", s.model.dropout_rate);
  s.train.epochs = config_size(c, "epochs", s.train.epochs);
  s.train.learning_rate = config_double(c, "lr", s.train.learning_rate);
  s.train.batch_size = config_size(c, "batch", s.train.batch_size);
  s.train.beta1 = config_double(c, "beta1", s.train.beta1);
  s.train.beta2 = config_double(c, "beta2", s.train.beta2);
  s.train.epsilon = config_double(c, "eps", s.train.epsilon);
  s.record.input_grad_stride = config_size(c, "vog_stride", s.record.input_grad_stride);

  auto& o = s.scorer;
  o.agreement_passes = config_size(c, "agreement_passes", o.agreement_passes);
  o.cleanlab_folds = config_size(c, "cleanlab_folds", o.cleanlab_folds);
  o.allsh_sigma = config_double(c, "allsh_sigma", o.allsh_sigma);
  o.detector_rate = config_double(c, "detector_rate", o.detector_rate);
  o.detector_c = config_double(c, "detector_c", o.detector_c);
  const std::string dist = config_string(c, "prototype_distance", "euclidean");
  if (dist == "euclidean")
    o.prototype_distance = PrototypeDistance::kEuclidean;
  else if (dist == "cosine")
    o.prototype_distance = PrototypeDistance::kCosine;
  else
    throw std::invalid_argument("prototype_distance: expected euclidean or cosine");

  s.model.validate();
  s.train.validate();
  return s;
}

SweepSpec sweep_from_config(const ConfigMap& c) {
  ConfigMap single = c;
  const auto kinds = split_list(config_string(c, "hardness", "mislabel_uniform"));
  const auto ps = c.count("p") ? parse_double_list(c.at("p")) : std::vector<double>{};
  single["hardness"] = kinds.empty() ? "mislabel_uniform" : kinds[0];
  single["p"] = ps.empty() ? "0.1" : io::format_double(ps[0]);
  SweepSpec s;
  s.base = setup_from_config(single);
  s.kinds = kinds;
  s.p_values = ps;
  if (c.count("seeds")) s.seeds = parse_u64_list(c.at("seeds"));
  s.jobs = config_size(c, "jobs", 1);
  for (const auto& k : s.kinds) parse_hardness(k, s.base.params);
  return s;
}

ConfigMap config_from_setup(const SetupSpec& s) {
  ConfigMap c;
  c["seed"] = std::to_string(s.master_seed);
  const auto& d = s.dataset;
  c["dataset"] = d.source;
  c["n"] = std::to_string(d.n);
  c["d"] = std::to_string(d.d);
  c["k"] = std::to_string(d.k);
  c["sep"] = io::format_double(d.separation);
  c["layout"] = layout_name(d.layout);
  c["grid_h"] = std::to_string(d.grid_height);
  c["grid_w"] = std::to_string(d.grid_width);
  c["noise"] = io::format_double(d.noise);
  if (!d.csv_path.empty()) c["csv"] = d.csv_path.string();
  c["target"] = d.target;
  c["standardize"] = d.standardize ? "true" : "false";
  c["hardness"] = s.hardness;
  c["p"] = io::format_double(s.p);
  c["replicate"] = std::to_string(s.replicate);
  c["methods"] = method_list(s.methods);
  c["alpha"] = io::format_double(s.params.alpha);
  c["sigma"] = io::format_double(s.params.sigma);
  c["quantile"] = io::format_double(s.params.quantile);
  c["pixels"] = std::to_string(s.params.pixels);
  c["factor"] = io::format_double(s.params.factor);
  c["hidden"] = join_map(s.model.hidden_sizes, [](std::size_t w) { return std::to_string(w); });
  c["dropout"] = io::format_double(s.model.dropout_rate);
  c["epochs"] = std::to_string(s.train.epochs);
  c["lr"] = io::format_double(s.train.learning_rate);
  c["batch"] = std::to_string(s.train.batch_size);
  c["beta1"] = io::format_double(s.train.beta1);
  c["beta2"] = io::format_double(s.train.beta2);
  c["eps"] = io::format_double(s.train.epsilon);
  c["vog_stride"] = std::to_string(s.record.input_grad_stride);
  c["agreement_passes"] = std::to_string(s.scorer.agreement_passes);
  c["cleanlab_folds"] = std::to_string(s.scorer.cleanlab_folds);
  c["allsh_sigma"] = io::format_double(s.scorer.allsh_sigma);
  c["detector_rate"] = io::format_double(s.scorer.detector_rate);
  c["detector_c"] = io::format_double(s.scorer.detector_c);
  c["prototype_distance"] = s.scorer.prototype_distance == PrototypeDistance::kCosine ? "cosine" : "euclidean";
  return c;
}

ConfigMap config_from_sweep(const SweepSpec& s) {
  if (s.datasets.size() > 1) throw std::invalid_argument("config files describe a single dataset per sweep");
  SetupSpec base = s.base;
  if (!s.datasets.empty()) base.dataset = s.datasets[0];
  ConfigMap c = config_from_setup(base);
  c.erase("replicate");
  c["hardness"] = join(s.kinds);
  if (s.p_values.empty())
    c.erase("p");
  else
    c["p"] = join_map(s.p_values, [](double p) { return io::format_double(p); });
  c["seeds"] = join_map(s.seeds, [](std::uint64_t v) { return std::to_string(v); });
  c["jobs"] = std::to_string(s.jobs);
  return c;
}

ConfigMap config_from_manifest(const fs::path& manifest_json) {
  const auto j = ordered_json::parse(io::read_file(manifest_json));
  if (!j.contains("config") || !j["config"].is_object())
    throw std::invalid_argument(manifest_json.string() + ": no config object");
  ConfigMap c;
  for (const auto& [k, v] : j["config"].items()) c[k] = v.get<std::string>();
  return c;
}

}  // namespace hardbench
