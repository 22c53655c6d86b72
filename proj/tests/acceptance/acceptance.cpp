// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <stdexcept>
#include <vector>

#include "hardbench/evaluator.hpp"
#include "hardbench/hardness.hpp"
#include "hardbench/hcm.hpp"
#include "hardbench/io.hpp"
#include "hardbench/metrics.hpp"
#include "hardbench/mlp.hpp"
#include "hardbench/rank_tests.hpp"
#include "hardbench/rng.hpp"
#include "hardbench/runner.hpp"

using namespace hardbench;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(double v, int digits = 4) { return io::format_fixed(v, digits); }

// ---- 1: metric oracles ------------------------------------------------------

double brute_auprc(const std::vector<double>& s, const std::vector<std::uint8_t>& f) {
  std::set<double, std::greater<>> cuts(s.begin(), s.end());
  std::size_t positives = 0;
  for (const auto x : f) positives += x;
  long double ap = 0.0L;
  std::size_t prev = 0;
  for (const double t : cuts) {
    std::size_t tp = 0, taken = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] >= t) {
        ++taken;
        tp += f[i];
      }
    ap += (static_cast<long double>(tp) / taken) * (static_cast<long double>(tp - prev) / positives);
    prev = tp;
  }
  return static_cast<double>(ap);
}

double brute_auroc(const std::vector<double>& s, const std::vector<std::uint8_t>& f) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (f[i] && !f[j]) {
        pairs += 1.0;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return wins / pairs;
}

Outcome metric_oracles() {
  std::size_t mismatches = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    CounterRng rng(seed, 1);
    const std::size_t n = 2 + rng.below(19);
    std::vector<double> s(n);
    std::vector<std::uint8_t> f(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(5)) / 4.0;
      f[i] = rng.uniform() < 0.5;
    }
    f[0] = 1;
    f[1] = 0;
    const double dp = std::abs(auprc(s, f) - brute_auprc(s, f));
    worst = std::max(worst, dp);
    if (dp > 1e-12 || auroc(s, f) != brute_auroc(s, f)) ++mismatches;
  }
  return {mismatches == 0, "200 instances, mismatches " + std::to_string(mismatches) + ", max |dAP| " +
                               io::format_double(worst)};
}

// ---- 2: gradients -----------------------------------------------------------

double loss_of(const Mlp& m, std::span<const double> x, int y) {
  Workspace ws(m);
  forward_sample(m, x, ws);
  return cross_entropy(ws.logits(), y);
}

double logit_of(const Mlp& m, std::span<const double> x, int c) {
  Workspace ws(m);
  forward_sample(m, x, ws);
  return ws.logits()[static_cast<std::size_t>(c)];
}

Outcome gradients() {
  const double h = 1e-5;
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t net = 0; net < 50; ++net) {
    CounterRng rng(net, 2);
    MlpConfig cfg;
    cfg.hidden_sizes = {2 + rng.below(6), 2 + rng.below(6)};
    cfg.dropout_rate = 0.0;
    cfg.seed = net;
    const std::size_t d = 1 + rng.below(4);
    const int k = 2 + static_cast<int>(rng.below(3));
    Mlp m(cfg, d, k);
    // Random biases as well as weights: zero biases behind a dead layer put
    // pre-activations exactly on the ReLU kink, where no derivative exists.
    auto theta = flatten(m.layers());
    for (double& v : theta) v = rng.normal();
    unflatten(theta, m.layers());
    std::vector<double> x(d);
    for (double& v : x) v = rng.normal();
    const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));

    auto rel = [](double a, double n) { return std::abs(a - n) / std::max(1.0, std::abs(n)); };
    const auto g = flatten(loss_gradient(m, x, y));
    auto params = flatten(m.layers());
    for (std::size_t p = 0; p < params.size(); ++p) {
      const double saved = params[p];
      params[p] = saved + h;
      unflatten(params, m.layers());
      const double up = loss_of(m, x, y);
      params[p] = saved - h;
      unflatten(params, m.layers());
      const double down = loss_of(m, x, y);
      params[p] = saved;
      unflatten(params, m.layers());
      worst = std::max(worst, rel(g[p], (up - down) / (2.0 * h)));
      ++checked;
    }
    const auto gi = input_gradient(m, x, y);
    for (std::size_t j = 0; j < d; ++j) {
      auto up = x, down = x;
      up[j] += h;
      down[j] -= h;
      worst = std::max(worst, rel(gi[j], (logit_of(m, up, y) - logit_of(m, down, y)) / (2.0 * h)));
      ++checked;
    }
  }
  return {worst <= 1e-4, "50 networks, " + std::to_string(checked) + " partials, max rel err " + io::format_double(worst)};
}

// ---- 3: perturbation contracts ----------------------------------------------

Outcome perturbation_contracts() {
  std::vector<std::string> failures;
  const Dataset tab = generate_blobs(1000, 2, 4, 8.0, 3);
  const Dataset grid = generate_glyphs(200, GridShape{8, 8}, 3, 0.3, 4);
  for (const auto& name : perturbation_names()) {
    const Perturbation step = parse_perturbation(name);
    const Dataset& ds = requires_grid(step) ? grid : tab;
    for (const double p : {0.1, 0.3}) {
      const auto r = perturb(ds, HardnessSpec{{step}, p, 17});
      const auto expected = static_cast<std::size_t>(std::floor(p * static_cast<double>(ds.size()) + 1e-9));
      bool ok = r.flags.count == expected &&
                static_cast<std::size_t>(std::count(r.flags.flags.begin(), r.flags.flags.end(), 1)) == expected;
      if (is_mislabeling(step)) {
        ok = ok && r.data.features == ds.features;
        for (std::size_t i = 0; i < ds.size(); ++i)
          ok = ok && ((r.flags.flags[i] != 0) == (r.data.labels[i] != ds.labels[i]));
      } else {
        ok = ok && r.data.labels == ds.labels;
        for (std::size_t i = 0; i < ds.size(); ++i) {
          if (r.flags.flags[i]) continue;
          const auto a = r.data.features.row(i);
          const auto b = ds.features.row(i);
          ok = ok && std::equal(a.begin(), a.end(), b.begin());
        }
      }
      if (!ok) failures.push_back(name + "@" + io::format_double(p));
    }
  }

  // Uniform: 1/(k-1) per wrong class.
  const std::size_t n = 90000;
  FlagSet all;
  all.flags.assign(n, 1);
  all.count = n;
  {
    std::vector<int> labels(n, 3);
    const auto out = mislabel_uniform(labels, all, 10, 8);
    std::vector<double> hist(10, 0.0);
    for (const int y : out) hist[static_cast<std::size_t>(y)] += 1.0 / n;
    for (int c = 0; c < 10; ++c)
      if (c != 3 && std::abs(hist[static_cast<std::size_t>(c)] - 1.0 / 9.0) > 0.01) failures.push_back("uniform-freq");
  }
  // Asymmetric: empirical frequencies follow the transition matrix.
  {
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 3);
    const auto r = mislabel_asymmetric(labels, all, 3, 0.5, 6);
    std::vector<std::vector<double>> freq(3, std::vector<double>(3, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      freq[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(r.labels[i])] += 3.0 / n;
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = 0; b < 3; ++b)
        if (std::abs(freq[a][b] - r.transition(a, b)) > 0.01) failures.push_back("asymmetric-freq");
  }
  // Instance: probabilistic rule frequencies.
  {
    RuleMatrix rules;
    rules.rows = {{{1, 0.7}, {2, 0.3}}, {{0, 1.0}}, {{0, 1.0}}};
    std::vector<int> labels(n, 0);
    const auto out = mislabel_instance(labels, all, rules, 4);
    const double ones = static_cast<double>(std::count(out.begin(), out.end(), 1)) / n;
    if (std::abs(ones - 0.7) > 0.01) failures.push_back("instance-freq");
  }
  // Covariate: noise std within 5%.
  {
    Matrix x(5000, 2, 0.0);
    FlagSet f;
    f.flags.assign(5000, 1);
    f.count = 5000;
    const Matrix y = perturb_near_ood_covariate(x, f, 0.5, 1);
    double ss = 0.0;
    for (const double v : y.values()) ss += v * v;
    if (std::abs(std::sqrt(ss / 10000.0) - 0.5) > 0.025) failures.push_back("covariate-std");
  }
  // Flag selection frequency.
  {
    std::vector<double> hits(20, 0.0);
    for (std::uint64_t s = 0; s < 10000; ++s) {
      const FlagSet f = select_flags(20, 0.1, s);
      for (std::size_t i = 0; i < 20; ++i) hits[i] += f.flags[i] / 10000.0;
    }
    for (const double h : hits)
      if (std::abs(h - 0.1) > 0.01) failures.push_back("flag-freq");
  }
  std::string detail = std::to_string(perturbation_names().size()) + " kinds x 2 p + Monte Carlo checks";
  if (!failures.empty()) {
    detail += "; failed:";
    for (const auto& f : failures) detail += " " + f;
  }
  return {failures.empty(), detail};
}

// ---- 4-7, 9: end-to-end -------------------------------------------------------

SetupSpec blobs_setup(const std::string& extra) {
  return setup_from_config(parse_config("n=1000\nd=2\nk=4\nsep=8\n" + extra));
}

std::map<Method, std::pair<double, double>> mean_metrics(SetupSpec spec, const std::vector<std::uint64_t>& seeds,
                                                         std::string& error) {
  std::map<Method, std::pair<double, double>> sums;
  for (const auto s : seeds) {
    spec.replicate = s;
    const SetupOutcome o = run_setup(spec);
    if (o.status != SetupStatus::kOk) {
      error = spec.setup_id() + ": " + o.reason;
      return {};
    }
    for (const auto& m : o.report->methods) {
      sums[m.method].first += m.d_auprc / static_cast<double>(seeds.size());
      sums[m.method].second += m.d_auroc / static_cast<double>(seeds.size());
    }
  }
  return sums;
}

Outcome detection_reproduction() {
  std::string error;
  const auto m = mean_metrics(blobs_setup("hardness=mislabel_uniform\np=0.1\nmethods=aum,loss,el2n,dataiq,random\n"),
                              {0, 1, 2}, error);
  if (!error.empty()) return {false, error};
  bool ok = true;
  std::ostringstream d;
  for (const Method x : {Method::kAum, Method::kLoss, Method::kEl2n, Method::kDataIq}) {
    const auto [ap, roc] = m.at(x);
    ok = ok && ap >= 0.70 && roc >= 0.85;
    d << method_name(x) << " " << fmt(ap, 3) << "/" << fmt(roc, 3) << ", ";
  }
  const double rnd = m.at(Method::kRandom).first;
  ok = ok && std::abs(rnd - 0.10) <= 0.03;
  d << "random " << fmt(rnd, 3);
  return {ok, d.str()};
}

Outcome proportion_degradation() {
  std::string error;
  double lift[2];
  const double ps[2] = {0.1, 0.4};
  for (int i = 0; i < 2; ++i) {
    const auto m = mean_metrics(
        blobs_setup("hardness=mislabel_uniform\nmethods=aum\np=" + io::format_double(ps[i]) + "\n"), {0, 1, 2}, error);
    if (!error.empty()) return {false, error};
    lift[i] = (m.at(Method::kAum).first - ps[i]) / (1.0 - ps[i]);
  }
  return {lift[1] < lift[0], "AUM lift p=0.1 " + fmt(lift[0], 5) + ", p=0.4 " + fmt(lift[1], 5)};
}

Outcome far_vs_instance() {
  std::string error;
  double mean[2];
  const char* kinds[2] = {"far_ood", "mislabel_instance"};
  for (int i = 0; i < 2; ++i) {
    const auto m = mean_metrics(setup_from_config(parse_config(std::string("n=1000\nd=2\nk=3\nsep=8\nlayout=line\n") +
                                                               "methods=aum,loss,prototypicality\np=0.1\nhardness=" +
                                                               kinds[i] + "\n")),
                                {0, 1, 2}, error);
    if (!error.empty()) return {false, error};
    mean[i] = (m.at(Method::kAum).first + m.at(Method::kLoss).first + m.at(Method::kPrototypicality).first) / 3.0;
  }
  return {mean[0] > mean[1], "mean D-AUPRC far_ood " + fmt(mean[0], 3) + ", mislabel_instance " + fmt(mean[1], 3)};
}

Outcome stability() {
  const StabilityOutcome o =
      run_stability(blobs_setup("hardness=mislabel_uniform\np=0.1\nmethods=loss,aum,grand\n"), std::size_t{3});
  const auto& r = o.report;
  auto rho = [&](Method m) {
    for (std::size_t i = 0; i < r.methods.size(); ++i)
      if (r.methods[i] == m) return r.mean_rho[i].value_or(std::nan(""));
    return std::nan("");
  };
  const double loss = rho(Method::kLoss), aum = rho(Method::kAum), grand = rho(Method::kGrand);
  return {loss >= 0.8 && aum >= 0.8 && loss > grand,
          "rho loss " + fmt(loss, 3) + ", aum " + fmt(aum, 3) + ", grand " + fmt(grand, 3)};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "hardbench-acceptance-determinism";
  fs::remove_all(root);
  SweepSpec spec = sweep_from_config(parse_config(
      "n=1000\nd=2\nk=4\nsep=8\nhardness=mislabel_uniform,far_ood\np=0.1,0.2\nseeds=0,1\njobs=1\n"));
  sweep(spec, root / "first");
  const ConfigMap persisted = config_from_manifest(root / "first" / "sweep_manifest.json");
  std::string detail = "8 setups;";
  bool ok = true;
  const std::string reference = io::read_file(root / "first" / "metrics.csv");
  for (const std::size_t jobs : {std::size_t{1}, std::size_t{8}}) {
    SweepSpec again = sweep_from_config(persisted);
    again.jobs = jobs;
    const fs::path dir = root / ("jobs" + std::to_string(jobs));
    const SweepResult r = sweep(again, dir);
    bool same = io::read_file(dir / "metrics.csv") == reference && r.failed == 0;
    for (const auto& o : r.outcomes) {
      const fs::path rel = fs::path("setups") / o.descriptor.setup_id / "metrics.csv";
      same = same && io::read_file(dir / rel) == io::read_file(root / "first" / rel);
    }
    ok = ok && same;
    detail += " jobs=" + std::to_string(jobs) + (same ? " identical" : " DIFFERENT");
  }
  fs::remove_all(root);
  return {ok, detail};
}

// ---- 8: rank statistics -------------------------------------------------------

Outcome rank_statistics() {
  Matrix ranks(4, 3);
  for (std::size_t s = 0; s < 4; ++s)
    for (std::size_t m = 0; m < 3; ++m) ranks(s, m) = static_cast<double>(m + 1);
  const FriedmanResult f = friedman(ranks);
  Matrix metrics(12, 2);
  for (std::size_t s = 0; s < 12; ++s) {
    metrics(s, 0) = 0.9 + 0.001 * static_cast<double>(s);
    metrics(s, 1) = 0.5;
  }
  const PosthocResult post = pairwise_posthoc(metrics);
  Matrix tied(12, 2, 0.4);
  const PosthocResult same = pairwise_posthoc(tied);
  const bool ok = std::abs(f.statistic - 8.0) < 1e-12 && f.df == 2 && std::abs(f.p_value - 0.0183) <= 1e-3 &&
                  post.p_values(0, 1) < 0.05 && same.p_values(0, 1) == 1.0;
  return {ok, "chi2 " + fmt(f.statistic, 6) + ", df " + std::to_string(f.df) + ", p " + fmt(f.p_value, 6) +
                  "; 12-setup pair p " + io::format_double(post.p_values(0, 1)) + "; tied p " +
                  io::format_double(same.p_values(0, 1))};
}

// ---- 10: closed-form scorers ----------------------------------------------------

DynamicsRecord series(std::size_t k, const std::vector<std::vector<double>>& probs) {
  DynamicsRecord r;
  r.epochs = probs.size();
  r.samples = 1;
  r.classes = k;
  r.inputs = 1;
  r.probs = Tensor3(r.epochs, 1, k);
  r.logits = Tensor3(r.epochs, 1, k);
  r.losses = Matrix(r.epochs, 1);
  r.correct.assign(r.epochs, 0);
  for (std::size_t t = 0; t < r.epochs; ++t)
    for (std::size_t c = 0; c < k; ++c) r.probs(t, 0, c) = probs[t][c];
  return r;
}

Outcome closed_forms() {
  const std::vector<int> y = {0};
  std::vector<std::string> failures;
  auto expect = [&](const char* what, double got, double want, double tol) {
    if (!(std::abs(got - want) <= tol)) failures.push_back(std::string(what) + "=" + io::format_double(got));
  };
  expect("el2n-2", score_el2n(series(2, {{0.5, 0.5}}), y).raw[0], 0.70711, 1e-5);
  expect("el2n-4", score_el2n(series(4, {{0.25, 0.25, 0.25, 0.25}}), y).raw[0], 0.86603, 1e-5);
  const auto iq = score_dataiq(series(2, {{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}}), y);
  expect("dataiq-conf", iq.confidence.raw[0], 0.5, 1e-12);
  expect("dataiq-aleatoric", iq.uncertainty.raw[0], 0.25, 1e-12);
  const auto maps = score_datamaps(series(2, {{0, 1}, {1, 0}, {0, 1}, {1, 0}}), y);
  expect("datamaps-variability", maps.uncertainty.raw[0], 0.5, 1e-12);

  DynamicsRecord loss = series(3, {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3}});
  loss.losses(0, 0) = loss.losses(1, 0) = std::log(3.0);
  expect("loss", score_loss(loss).raw[0], std::log(3.0), 1e-12);

  DynamicsRecord aum = series(3, {{0, 0, 0}, {0, 0, 0}});
  for (std::size_t t = 0; t < 2; ++t) {
    aum.logits(t, 0, 0) = 2.0;
    aum.logits(t, 0, 1) = 1.0;
  }
  expect("aum-const", score_aum(aum, y).raw[0], 1.0, 1e-12);
  aum.logits(1, 0, 0) = 0.0;
  aum.logits(1, 0, 1) = 1.0;
  aum.logits(0, 0, 0) = 2.0;
  expect("aum-avg", score_aum(aum, y).raw[0], 0.0, 1e-12);
  expect("kl", kl_divergence(std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.5}), 0.69315, 1e-5);

  std::string detail = "EL2N, Data-IQ, Data Maps, Loss, AUM, KL";
  if (!failures.empty()) {
    detail += "; failed:";
    for (const auto& f : failures) detail += " " + f;
  }
  return {failures.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "metric oracle equivalence", 5, metric_oracles},
      {2, "gradient correctness", 10, gradients},
      {3, "perturbation contract suite", 30, perturbation_contracts},
      {4, "detection reproduction", 180, detection_reproduction},
      {5, "proportion degradation", 300, proportion_degradation},
      {6, "far-OoD easier than instance mislabeling", 300, far_vs_instance},
      {7, "stability ordering", 300, stability},
      {8, "rank statistics", 1, rank_statistics},
      {9, "sweep determinism across parallelism", 600, determinism},
      {10, "closed-form scorer checks", 1, closed_forms},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs < c.budget_seconds;
    const bool pass = o.pass && in_budget;
    if (!pass) ++failed;
    std::printf("%s criterion %d: %s (%s) [%.2f s, budget %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), secs, c.budget_seconds, in_budget ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
