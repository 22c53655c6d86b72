#include <omp.h>

#include <algorithm>
#include <stdexcept>

#include "hardbench/trainer.hpp"

namespace hardbench::kernels {

namespace {

struct SampleScratch {
  explicit SampleScratch(const Mlp& model)
      : ws(model), dlogits(static_cast<std::size_t>(model.classes())), dinput(model.inputs()) {}
  Workspace ws;
  std::vector<double> dlogits;
  std::vector<double> dinput;
};

void check_shapes(const Mlp& model, const Dataset& ds, const DynamicsRecord& record, std::size_t epoch,
                  long checkpoint, bool embed) {
  if (ds.dims() != model.inputs()) throw std::invalid_argument("record_epoch: dataset width does not match model");
  if (epoch >= record.epochs || record.samples != ds.size())
    throw std::invalid_argument("record_epoch: record not sized for this dataset/epoch");
  if (checkpoint >= 0 && static_cast<std::size_t>(checkpoint) >= record.input_grads.outer())
    throw std::invalid_argument("record_epoch: checkpoint slot out of range");
  if (embed && record.embeddings.rows() != ds.size())
    throw std::invalid_argument("record_epoch: embeddings not allocated");
}

void record_sample(const Mlp& model, const Dataset& ds, DynamicsRecord& rec, std::size_t t, long checkpoint,
                   bool embed, std::size_t i, SampleScratch& s) {
  forward_sample(model, ds.features.row(i), s.ws);
  const auto z = s.ws.logits();
  const auto y = static_cast<std::size_t>(ds.labels[i]);
  auto logits = rec.logits.at(t, i);
  auto probs = rec.probs.at(t, i);
  std::copy(z.begin(), z.end(), logits.begin());
  const double lse = softmax(z, probs);
  rec.losses(t, i) = lse - z[y];
  const auto top = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  rec.correct[t * rec.samples + i] = top == y ? 1 : 0;

  if (!rec.grad_sq_norm.empty()) {
    std::copy(probs.begin(), probs.end(), s.dlogits.begin());
    s.dlogits[y] -= 1.0;
    double sq = 0.0;
    backward_sample(model, s.ws, s.dlogits, nullptr, 1.0, {}, &sq);
    rec.grad_sq_norm(t, i) = sq;
  }
  if (checkpoint >= 0) {
    std::fill(s.dlogits.begin(), s.dlogits.end(), 0.0);
    s.dlogits[y] = 1.0;
    backward_sample(model, s.ws, s.dlogits, nullptr, 1.0, s.dinput, nullptr);
    auto dst = rec.input_grads.at(static_cast<std::size_t>(checkpoint), i);
    std::copy(s.dinput.begin(), s.dinput.end(), dst.begin());
  }
  if (embed) {
    const auto e = s.ws.embedding();
    std::copy(e.begin(), e.end(), rec.embeddings.row(i).begin());
  }
}

void mc_sample(const Mlp& model, const Matrix& x, std::size_t pass, std::size_t i, std::uint64_t seed,
               Workspace& ws, Tensor3& out) {
  const auto row = x.row(i);
  CounterRng rng(derive_seed(seed, "mc-dropout", {pass, row_key(row.data(), row.size())}));
  forward_sample(model, x.row(i), ws, &rng);
  softmax(ws.logits(), out.at(pass, i));
}

void check_mc(const Mlp& model, const Matrix& x, std::size_t passes) {
  if (passes < 1) throw std::invalid_argument("mc_dropout_proba: passes must be >= 1");
  if (x.cols() != model.inputs()) throw std::invalid_argument("mc_dropout_proba: width does not match model");
}

}  // namespace

void record_epoch(const Mlp& model, const Dataset& ds, DynamicsRecord& record, std::size_t epoch, long checkpoint,
                  bool embed) {
  check_shapes(model, ds, record, epoch, checkpoint, embed);
  const auto n = static_cast<long>(ds.size());
#pragma omp parallel
  {
    SampleScratch scratch(model);
#pragma omp for schedule(static)
    for (long i = 0; i < n; ++i)
      record_sample(model, ds, record, epoch, checkpoint, embed, static_cast<std::size_t>(i), scratch);
  }
}

Tensor3 mc_dropout_proba(const Mlp& model, const Matrix& x, std::size_t passes, std::uint64_t seed) {
  check_mc(model, x, passes);
  Tensor3 out(passes, x.rows(), static_cast<std::size_t>(model.classes()));
  const auto total = static_cast<long>(passes * x.rows());
  const std::size_t n = x.rows();
#pragma omp parallel
  {
    Workspace ws(model);
#pragma omp for schedule(static)
    for (long flat = 0; flat < total; ++flat) {
      const auto f = static_cast<std::size_t>(flat);
      mc_sample(model, x, f / n, f % n, seed, ws, out);
    }
  }
  return out;
}

namespace serial {

void record_epoch(const Mlp& model, const Dataset& ds, DynamicsRecord& record, std::size_t epoch, long checkpoint,
                  bool embed) {
  check_shapes(model, ds, record, epoch, checkpoint, embed);
  SampleScratch scratch(model);
  for (std::size_t i = 0; i < ds.size(); ++i) record_sample(model, ds, record, epoch, checkpoint, embed, i, scratch);
}

Tensor3 mc_dropout_proba(const Mlp& model, const Matrix& x, std::size_t passes, std::uint64_t seed) {
  check_mc(model, x, passes);
  Tensor3 out(passes, x.rows(), static_cast<std::size_t>(model.classes()));
  Workspace ws(model);
  for (std::size_t p = 0; p < passes; ++p)
    for (std::size_t i = 0; i < x.rows(); ++i) mc_sample(model, x, p, i, seed, ws, out);
  return out;
}

}  // namespace serial

}  // namespace hardbench::kernels
