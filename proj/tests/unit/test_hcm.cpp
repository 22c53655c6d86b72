#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "hardbench/hardness.hpp"
#include "hardbench/hcm.hpp"
#include "hardbench/metrics.hpp"
#include "hardbench/rng.hpp"

using namespace hardbench;

namespace {

// Empty record with n samples, k classes, T epochs and d inputs.
DynamicsRecord blank(std::size_t n, std::size_t k, std::size_t epochs, std::size_t d = 2) {
  DynamicsRecord r;
  r.epochs = epochs;
  r.samples = n;
  r.classes = k;
  r.inputs = d;
  r.probs = Tensor3(epochs, n, k);
  r.logits = Tensor3(epochs, n, k);
  r.losses = Matrix(epochs, n);
  r.correct.assign(epochs * n, 0);
  r.grad_sq_norm = Matrix(epochs, n);
  r.embeddings = Matrix(n, d);
  return r;
}

// Single sample whose true-class probability is p[t] at epoch t (k = 2, label 0).
DynamicsRecord true_class_series(const std::vector<double>& p) {
  DynamicsRecord r = blank(1, 2, p.size());
  for (std::size_t t = 0; t < p.size(); ++t) {
    r.probs(t, 0, 0) = p[t];
    r.probs(t, 0, 1) = 1.0 - p[t];
  }
  return r;
}

struct Trained {
  Dataset observed;
  FlagSet flags;
  Mlp model;
  MlpConfig model_config;
  TrainConfig train_config;
  DynamicsRecord dyn;
};

Trained train_noisy(std::size_t n = 300, std::size_t epochs = 8) {
  Trained t;
  const Dataset clean = standardize(generate_blobs(n, 2, 3, 8.0, 11));
  const auto r = perturb(clean, HardnessSpec{{MislabelUniform{}}, 0.1, 5});
  t.observed = r.data;
  t.flags = r.flags;
  t.model_config.hidden_sizes = {16};
  t.model_config.dropout_rate = 0.1;
  t.model_config.seed = 2;
  t.train_config.epochs = epochs;
  t.train_config.seed = 3;
  t.model = Mlp(t.model_config, 2, 3);
  t.dyn = fit_with_recording(t.model, t.observed, t.train_config, RecordOptions{true, true, 1});
  return t;
}

DynamicsRecord permute_record(const DynamicsRecord& r, const std::vector<std::size_t>& perm) {
  DynamicsRecord out = r;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const std::size_t s = perm[i];
    for (std::size_t t = 0; t < r.epochs; ++t) {
      for (std::size_t c = 0; c < r.classes; ++c) {
        out.probs(t, i, c) = r.probs(t, s, c);
        out.logits(t, i, c) = r.logits(t, s, c);
      }
      out.losses(t, i) = r.losses(t, s);
      out.correct[t * r.samples + i] = r.correct[t * r.samples + s];
      if (!r.grad_sq_norm.empty()) out.grad_sq_norm(t, i) = r.grad_sq_norm(t, s);
    }
    for (std::size_t j = 0; j < r.embeddings.cols(); ++j) out.embeddings(i, j) = r.embeddings(s, j);
    for (std::size_t q = 0; q < r.input_grads.outer(); ++q)
      for (std::size_t j = 0; j < r.inputs; ++j) out.input_grads(q, i, j) = r.input_grads(q, s, j);
  }
  return out;
}

}  // namespace

TEST_CASE("method names round-trip and the default list has thirteen entries") {
  CHECK(default_methods().size() == 13);
  for (const Method m : default_methods()) CHECK(parse_method(method_name(m)) == m);
  CHECK_THROWS_AS(parse_method("nope"), std::invalid_argument);
  CHECK_THROWS_AS(parse_methods("aum,aum"), std::invalid_argument);
}

TEST_CASE("orientation follows the direction table") {
  for (const Method m : {Method::kAum, Method::kCleanlab, Method::kAgreement, Method::kDataIq, Method::kDataMaps})
    CHECK(hard_is_low(m));
  for (const Method m : {Method::kLoss, Method::kGrand, Method::kEl2n, Method::kVog, Method::kForgetting,
                         Method::kPrototypicality, Method::kAllsh, Method::kDetector, Method::kDataIqAleatoric,
                         Method::kDataMapsVariability})
    CHECK_FALSE(hard_is_low(m));
  const ScoreVector aum = orient(Method::kAum, {1.0, -2.0});
  CHECK(aum.oriented == std::vector<double>{-1.0, 2.0});
  CHECK(aum.direction_flipped);
  const ScoreVector loss = orient(Method::kLoss, {1.0, -2.0});
  CHECK(loss.oriented == loss.raw);
  CHECK(orient(aum).oriented == aum.oriented);
  CHECK(orient(orient(aum)).oriented == aum.oriented);
  CHECK_THROWS_AS(orient(Method::kLoss, {NAN}), std::runtime_error);
}

TEST_CASE("aum") {
  DynamicsRecord r = blank(1, 3, 4);
  for (std::size_t t = 0; t < 4; ++t) {
    r.logits(t, 0, 0) = 2.0;
    r.logits(t, 0, 1) = 1.0;
  }
  const std::vector<int> y = {0};
  CHECK(score_aum(r, y).raw[0] == doctest::Approx(1.0));

  DynamicsRecord two = blank(1, 2, 2);
  two.logits(0, 0, 0) = 1.0;
  two.logits(1, 0, 1) = 1.0;
  CHECK(score_aum(two, y).raw[0] == doctest::Approx(0.0));

  // Adding a constant to every logit of a sample leaves the margin unchanged.
  const Trained tr = train_noisy(120, 3);
  DynamicsRecord shifted = tr.dyn;
  for (std::size_t t = 0; t < shifted.epochs; ++t)
    for (std::size_t i = 0; i < shifted.samples; ++i)
      for (std::size_t c = 0; c < shifted.classes; ++c) shifted.logits(t, i, c) += 3.0 + static_cast<double>(i % 7);
  const auto a = score_aum(tr.dyn, tr.observed.labels).raw;
  const auto b = score_aum(shifted, tr.observed.labels).raw;
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("data-iq and data maps") {
  const std::vector<int> y = {0};
  const auto half = score_dataiq(true_class_series({0.5, 0.5, 0.5}), y);
  CHECK(half.confidence.raw[0] == doctest::Approx(0.5));
  CHECK(half.uncertainty.raw[0] == doctest::Approx(0.25));
  const auto sure = score_dataiq(true_class_series({1.0, 1.0}), y);
  CHECK(sure.confidence.raw[0] == 1.0);
  CHECK(sure.uncertainty.raw[0] == 0.0);

  const auto alt = score_datamaps(true_class_series({0.0, 1.0, 0.0, 1.0}), y);
  CHECK(alt.confidence.raw[0] == doctest::Approx(0.5));
  CHECK(alt.uncertainty.raw[0] == doctest::Approx(0.5));
  CHECK(score_datamaps(true_class_series({0.3, 0.3, 0.3}), y).uncertainty.raw[0] == 0.0);
}

TEST_CASE("loss, el2n and grand") {
  DynamicsRecord r = blank(2, 4, 2);
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t c = 0; c < 4; ++c) {
      r.probs(t, 0, c) = 0.25;
      r.probs(t, 1, c) = c == 1 ? 1.0 : 0.0;
      r.losses(t, 0) = std::log(4.0);
    }
  const std::vector<int> y = {0, 1};
  CHECK(score_loss(r).raw[0] == doctest::Approx(std::log(4.0)));
  CHECK(score_loss(r).raw[1] == 0.0);
  const auto e = score_el2n(r, y).raw;
  CHECK(e[0] == doctest::Approx(0.86603).epsilon(1e-5));
  CHECK(e[1] == 0.0);

  const DynamicsRecord two = true_class_series({0.5});
  CHECK(score_el2n(two, std::vector<int>{0}).raw[0] == doctest::Approx(0.70711).epsilon(1e-5));

  r.grad_sq_norm(0, 0) = 9.0;
  r.grad_sq_norm(1, 0) = 16.0;
  CHECK(score_grand(r).raw[0] == doctest::Approx(3.5));
  CHECK(score_grand(r).raw[1] == 0.0);
}

TEST_CASE("grand matches per-sample gradient recomputation") {
  Trained tr = train_noisy(150, 4);
  const std::size_t last = tr.dyn.epochs - 1;
  for (std::size_t i = 0; i < tr.observed.size(); ++i) {
    const double direct = per_sample_grad_sq_norm(tr.model, tr.observed.features.row(i), tr.observed.labels[i]);
    REQUIRE(std::abs(tr.dyn.grad_sq_norm(last, i) - direct) <= 1e-9 * std::max(1.0, direct));
  }
  for (const double g : score_grand(tr.dyn).raw) CHECK(g >= 0.0);
}

TEST_CASE("vog") {
  DynamicsRecord r = blank(1, 2, 2, 2);
  r.input_grad_epochs = {0, 1};
  r.input_grads = Tensor3(2, 1, 2);
  r.input_grads(0, 0, 0) = 1.0;
  r.input_grads(0, 0, 1) = 3.0;
  r.input_grads(1, 0, 0) = 3.0;
  r.input_grads(1, 0, 1) = 1.0;
  CHECK(score_vog(r).raw[0] == doctest::Approx(1.0));

  r.input_grads(1, 0, 0) = 1.0;
  r.input_grads(1, 0, 1) = 3.0;
  CHECK(score_vog(r).raw[0] == 0.0);

  r.input_grad_epochs = {1};
  r.input_grads = Tensor3(1, 1, 2, 5.0);
  CHECK(score_vog(r).raw[0] == 0.0);

  r.input_grad_epochs.clear();
  r.input_grads = Tensor3();
  CHECK_THROWS_AS(score_vog(r), std::invalid_argument);
}

TEST_CASE("forgetting") {
  DynamicsRecord r = blank(3, 2, 4);
  const std::uint8_t seq[] = {1, 0, 1, 0};
  for (std::size_t t = 0; t < 4; ++t) {
    r.correct[t * 3 + 0] = seq[t];
    r.correct[t * 3 + 1] = 1;
    r.correct[t * 3 + 2] = 0;
  }
  const auto f = score_forgetting(r).raw;
  CHECK(f[0] == 2.0);
  CHECK(f[1] == 0.0);
  CHECK(f[2] == 5.0);
  CHECK(score_forgetting(blank(1, 2, 20)).raw[0] == 21.0);
}

TEST_CASE("prototypicality") {
  DynamicsRecord r = blank(7, 2, 1, 2);
  const double pts[7][2] = {{0, 0}, {0.1, 0}, {0, 0.1}, {5, 5}, {5.1, 5}, {5, 5.1}, {4.9, 5.0}};
  std::vector<int> y = {0, 0, 0, 1, 1, 1, 0};  // the last point is planted in cluster 1 but labeled 0
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 2; ++j) r.embeddings(i, j) = pts[i][j];
  const auto s = score_prototypicality(r, y, 2).raw;
  CHECK(std::max_element(s.begin(), s.end()) - s.begin() == 6);

  DynamicsRecord moved = r;
  for (std::size_t i = 0; i < 7; ++i) {
    moved.embeddings(i, 0) += 100.0;
    moved.embeddings(i, 1) -= 40.0;
  }
  const auto t = score_prototypicality(moved, y, 2).raw;
  for (std::size_t i = 0; i < 7; ++i) CHECK(t[i] == doctest::Approx(s[i]).epsilon(1e-9));

  DynamicsRecord centred = blank(2, 2, 1, 2);
  centred.embeddings(0, 0) = 1.0;
  centred.embeddings(1, 0) = 3.0;
  CHECK(score_prototypicality(centred, std::vector<int>{0, 0}, 2).raw[0] == doctest::Approx(1.0));
  DynamicsRecord three = blank(3, 2, 1, 1);
  three.embeddings(0, 0) = 1.0;
  three.embeddings(1, 0) = 3.0;
  three.embeddings(2, 0) = 2.0;
  CHECK(score_prototypicality(three, std::vector<int>{0, 0, 0}, 2).raw[2] == 0.0);
  const auto cosine = score_prototypicality(r, y, 2, PrototypeDistance::kCosine).raw;
  for (const double c : cosine) CHECK(c >= 0.0);
}

TEST_CASE("kl divergence") {
  CHECK(kl_divergence(std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.5}) ==
        doctest::Approx(0.69315).epsilon(1e-5));
  const std::vector<double> p = {0.2, 0.3, 0.5};
  CHECK(kl_divergence(p, p) == 0.0);
  CHECK_THROWS_AS(kl_divergence(p, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("allsh and agreement on a trained model") {
  Trained tr = train_noisy(150, 4);
  const auto allsh = score_allsh(tr.model, tr.observed, 0.1, 4).raw;
  for (const double v : allsh) CHECK(v >= 0.0);
  const auto tiny = score_allsh(tr.model, tr.observed, 1e-12, 4).raw;
  for (const double v : tiny) CHECK(v < 1e-9);
  CHECK_THROWS_AS(score_allsh(tr.model, tr.observed, 0.0, 4), std::invalid_argument);

  const auto agree = score_agreement(tr.model, tr.observed.features, 10, 1).raw;
  for (const double v : agree) {
    CHECK(v >= 1.0 / 3.0 - 1e-12);
    CHECK(v <= 1.0 + 1e-12);
  }

  MlpConfig plain_cfg = tr.model_config;
  plain_cfg.dropout_rate = 0.0;
  Mlp plain(plain_cfg, 2, 3);
  fit(plain, tr.observed, tr.train_config);
  const Matrix p = predict_proba(plain, tr.observed.features);
  const auto det = score_agreement(plain, tr.observed.features, 10, 1).raw;
  for (std::size_t i = 0; i < det.size(); ++i)
    CHECK(det[i] == doctest::Approx(std::max({p(i, 0), p(i, 1), p(i, 2)})).epsilon(1e-12));
}

TEST_CASE("confident joint matches a brute-force threshold rule") {
  Matrix hand(4, 2);
  const double table[4][2] = {{0.9, 0.1}, {0.4, 0.6}, {0.3, 0.7}, {0.8, 0.2}};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 2; ++j) hand(i, j) = table[i][j];
  const ConfidentJoint cj = confident_joint(hand, std::vector<int>{0, 0, 1, 1}, 2);
  CHECK(cj.thresholds[0] == doctest::Approx(0.65));
  CHECK(cj.thresholds[1] == doctest::Approx(0.45));
  CHECK(cj.counts == std::vector<std::vector<std::size_t>>{{1, 1}, {1, 1}});

  CounterRng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 12;
    const int k = 3;
    Matrix p(n, 3);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(i % 3);
      double s = 0.0;
      for (std::size_t c = 0; c < 3; ++c) s += (p(i, c) = rng.uniform() + 0.01);
      for (std::size_t c = 0; c < 3; ++c) p(i, c) /= s;
    }
    std::vector<double> t(3, 0.0);
    for (std::size_t i = 0; i < n; ++i) t[static_cast<std::size_t>(y[i])] += p(i, static_cast<std::size_t>(y[i])) / 4.0;
    std::vector<std::vector<std::size_t>> expect(3, std::vector<std::size_t>(3, 0));
    for (std::size_t i = 0; i < n; ++i) {
      int best = -1;
      for (int c = 0; c < 3; ++c) {
        const auto cc = static_cast<std::size_t>(c);
        if (p(i, cc) < t[cc]) continue;
        if (best < 0 || p(i, cc) > p(i, static_cast<std::size_t>(best))) best = c;
      }
      if (best >= 0) ++expect[static_cast<std::size_t>(y[i])][static_cast<std::size_t>(best)];
    }
    CHECK(confident_joint(p, y, k).counts == expect);
  }
  CHECK_THROWS_AS(confident_joint(hand, std::vector<int>{0, 0, 0, 0}, 2), std::invalid_argument);
}

TEST_CASE("cleanlab on clean separable blobs has no off-diagonal mass") {
  const Dataset ds = standardize(generate_blobs(600, 2, 3, 10.0, 8));
  const MlpConfig mc;
  const TrainConfig tc;
  const CleanlabResult r = score_cleanlab(ds, mc, tc, 3, 1);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      if (a != b) CHECK(r.joint.counts[a][b] == 0);
  CHECK(r.out_of_sample_probs.rows() == 600);
  CHECK_THROWS_AS(score_cleanlab(ds, mc, tc, 1, 1), std::invalid_argument);
}

TEST_CASE("logistic fit separates a linear rule") {
  Matrix x(200, 2);
  std::vector<std::uint8_t> y(200);
  CounterRng rng(5);
  for (std::size_t i = 0; i < 200; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    y[i] = x(i, 0) + 0.5 * rng.normal() > 0.3;
  }
  const auto w = fit_logistic(x, y, 1.0);
  REQUIRE(w.size() == 3);
  CHECK(w[1] > 1.0);
  CHECK(std::abs(w[2]) < 0.5 * w[1]);
  CHECK(w[0] < 0.0);
  CHECK_THROWS_AS(fit_logistic(x, y, 0.0), std::invalid_argument);
}

TEST_CASE("standardized loss curves") {
  Matrix l(2, 3);
  l(0, 0) = 1.0;
  l(0, 1) = 3.0;
  l(0, 2) = 2.0;
  l(1, 0) = 5.0;
  l(1, 1) = 5.0;
  l(1, 2) = 5.0;
  const Matrix z = standardized_loss_curves(l);
  REQUIRE(z.rows() == 3);
  REQUIRE(z.cols() == 2);
  CHECK(z(0, 0) == doctest::Approx(-1.224744871391589));
  CHECK(z(1, 0) == doctest::Approx(1.224744871391589));
  for (std::size_t i = 0; i < 3; ++i) CHECK(z(i, 1) == 0.0);
}

TEST_CASE("detector recovers its calibration injections") {
  Trained tr = train_noisy(400, 10);
  const DetectorResult d =
      score_detector(tr.dyn, tr.observed, tr.model_config, tr.train_config, 0.1, 1.0, 9);
  CHECK(d.calibration_auroc >= 0.9);
  for (const double s : d.score.raw) {
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
  CHECK(d.weights.size() == 11);
  const DetectorResult again = score_detector(tr.dyn, tr.observed, tr.model_config, tr.train_config, 0.1, 1.0, 9);
  CHECK(again.score.raw == d.score.raw);
  CHECK_THROWS_AS(score_detector(tr.dyn, tr.observed, tr.model_config, tr.train_config, 0.3, 1.0, 9),
                  std::invalid_argument);
}

TEST_CASE("trained scorers flag mislabeled samples") {
  Trained tr = train_noisy(300, 10);
  const ScoringContext ctx{tr.dyn, tr.model, tr.observed, tr.model_config, tr.train_config};
  const std::vector<Method> methods = {Method::kAum, Method::kDataIq, Method::kLoss};
  const ScoringOutput out = compute_scores(ctx, methods, ScorerOptions{}, 1);
  for (const auto& s : out.scores) {
    double flagged = 0.0, clean = 0.0;
    for (std::size_t i = 0; i < s.oriented.size(); ++i) (tr.flags.flags[i] ? flagged : clean) += s.oriented[i];
    CHECK(flagged / static_cast<double>(tr.flags.count) >
          clean / static_cast<double>(s.oriented.size() - tr.flags.count));
  }
}

TEST_CASE("every scorer is equivariant to sample order") {
  Trained tr = train_noisy(180, 5);
  const std::size_t n = tr.observed.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  CounterRng rng(12);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

  const Dataset permuted_ds = subset(tr.observed, perm);
  const DynamicsRecord permuted_dyn = permute_record(tr.dyn, perm);
  std::vector<Method> methods = default_methods();
  methods.push_back(Method::kRandom);
  ScorerOptions opt;
  opt.agreement_passes = 3;
  const ScoringOutput a =
      compute_scores(ScoringContext{tr.dyn, tr.model, tr.observed, tr.model_config, tr.train_config}, methods, opt, 4);
  const ScoringOutput b = compute_scores(
      ScoringContext{permuted_dyn, tr.model, permuted_ds, tr.model_config, tr.train_config}, methods, opt, 4);
  REQUIRE(a.scores.size() == methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    CAPTURE(method_name(methods[m]));
    bool same = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = a.scores[m].oriented[perm[i]];
      const double y = b.scores[m].oriented[i];
      same = same && std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(x));
    }
    CHECK(same);
  }
}
