#include "hardbench/trainer.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "hardbench/io.hpp"
#include "hardbench/rng.hpp"

namespace hardbench {

namespace {

struct AdamState {
  Gradients first;
  Gradients second;
  std::size_t step = 0;
};

void adam_step(Mlp& model, const Gradients& grads, AdamState& state, const TrainConfig& cfg) {
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  auto update = [&](std::span<double> param, std::span<const double> g, std::span<double> m, std::span<double> v) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      param[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.epsilon);
    }
  };
  auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weights.values(), grads[l].weights.values(), state.first[l].weights.values(),
           state.second[l].weights.values());
    update(layers[l].bias, grads[l].bias, state.first[l].bias, state.second[l].bias);
  }
}

void reset(Gradients& g) {
  for (auto& layer : g) {
    std::fill(layer.weights.values().begin(), layer.weights.values().end(), 0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
}

template <typename OnEpoch>
void train_loop(Mlp& model, const Dataset& ds, const TrainConfig& cfg, OnEpoch&& on_epoch) {
  cfg.validate();
  if (ds.dims() != model.inputs()) throw std::invalid_argument("fit: dataset width does not match model");
  if (ds.size() == 0) throw std::invalid_argument("fit: empty dataset");
  const std::size_t n = ds.size();
  const auto k = static_cast<std::size_t>(model.classes());

  AdamState adam{model.zero_gradients(), model.zero_gradients(), 0};
  Gradients grads = model.zero_gradients();
  Workspace ws(model);
  std::vector<double> dlogits(k);
  std::vector<std::size_t> order(n);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    CounterRng shuffle(derive_seed(cfg.seed, "shuffle", {epoch}));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      reset(grads);
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        CounterRng dropout(derive_seed(cfg.seed, "dropout", {epoch, i}));
        forward_sample(model, ds.features.row(i), ws, &dropout);
        const double lse = softmax(ws.logits(), dlogits);
        const auto y = static_cast<std::size_t>(ds.labels[i]);
        batch_loss += lse - ws.logits()[y];
        dlogits[y] -= 1.0;
        backward_sample(model, ws, dlogits, &grads, scale, {}, nullptr);
      }
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(batch_index));
      adam_step(model, grads, adam, cfg);
    }
    on_epoch(epoch);
  }
}

std::string header_row(std::initializer_list<std::string> lead, std::string_view prefix, std::size_t count) {
  std::string row;
  for (const auto& l : lead) row += l + ",";
  for (std::size_t c = 0; c < count; ++c) row += std::string(prefix) + std::to_string(c) + (c + 1 < count ? "," : "");
  if (count == 0 && !row.empty()) row.pop_back();
  return row + "\n";
}

std::string tensor_csv(const Tensor3& t, std::string_view lead, std::string_view prefix) {
  std::string out = header_row({std::string(lead), "sample_id"}, prefix, t.inner());
  for (std::size_t a = 0; a < t.outer(); ++a)
    for (std::size_t b = 0; b < t.middle(); ++b) {
      out += std::to_string(a) + "," + std::to_string(b);
      for (const double v : t.at(a, b)) out += "," + io::format_double(v);
      out += "\n";
    }
  return out;
}

std::string epoch_matrix_csv(const Matrix& m, std::string_view name) {
  std::string out = "epoch,sample_id," + std::string(name) + "\n";
  for (std::size_t t = 0; t < m.rows(); ++t)
    for (std::size_t i = 0; i < m.cols(); ++i)
      out += std::to_string(t) + "," + std::to_string(i) + "," + io::format_double(m(t, i)) + "\n";
  return out;
}

std::vector<std::vector<double>> read_numeric_rows(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& f : io::split_csv_line(line)) row.push_back(f == "NA" ? std::nan("") : std::strtod(f.c_str(), nullptr));
    rows.push_back(std::move(row));
  }
  return rows;
}

void fill_tensor(Tensor3& t, const std::vector<std::vector<double>>& rows, std::size_t lead_cols) {
  for (const auto& row : rows) {
    const auto a = static_cast<std::size_t>(row[0]);
    const auto b = static_cast<std::size_t>(row[lead_cols - 1]);
    auto dst = t.at(a, b);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = row[lead_cols + c];
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
}

std::vector<std::size_t> checkpoint_epochs(std::size_t epochs, const RecordOptions& options) {
  std::vector<std::size_t> out;
  if (!options.input_grads) return out;
  const std::size_t stride = std::max<std::size_t>(options.input_grad_stride, 1);
  for (std::size_t t = 0; t < epochs; ++t)
    if (t % stride == 0 || t + 1 == epochs) out.push_back(t);
  return out;
}

DynamicsRecord make_record(const Mlp& model, const Dataset& ds, std::size_t epochs, const RecordOptions& options) {
  DynamicsRecord rec;
  rec.epochs = epochs;
  rec.samples = ds.size();
  rec.classes = static_cast<std::size_t>(model.classes());
  rec.inputs = model.inputs();
  rec.probs = Tensor3(epochs, rec.samples, rec.classes);
  rec.logits = Tensor3(epochs, rec.samples, rec.classes);
  rec.losses = Matrix(epochs, rec.samples);
  rec.correct.assign(epochs * rec.samples, 0);
  if (options.grad_norms) rec.grad_sq_norm = Matrix(epochs, rec.samples);
  rec.embeddings = Matrix(rec.samples, model.embedding_width());
  rec.input_grad_epochs = checkpoint_epochs(epochs, options);
  rec.input_grads = Tensor3(rec.input_grad_epochs.size(), rec.samples, rec.inputs);
  return rec;
}

void fit(Mlp& model, const Dataset& ds, const TrainConfig& config) {
  train_loop(model, ds, config, [](std::size_t) {});
}

DynamicsRecord fit_with_recording(Mlp& model, const Dataset& ds, const TrainConfig& config,
                                  const RecordOptions& options) {
  DynamicsRecord rec = make_record(model, ds, config.epochs, options);
  std::size_t next_checkpoint = 0;
  train_loop(model, ds, config, [&](std::size_t epoch) {
    long slot = -1;
    if (next_checkpoint < rec.input_grad_epochs.size() && rec.input_grad_epochs[next_checkpoint] == epoch)
      slot = static_cast<long>(next_checkpoint++);
    kernels::record_epoch(model, ds, rec, epoch, slot, epoch + 1 == config.epochs);
  });
  return rec;
}

Matrix predict_proba(const Mlp& model, const Matrix& x) {
  return forward(model, x, false, 0).probs;
}

Tensor3 mc_dropout_proba(const Mlp& model, const Matrix& x, std::size_t passes, std::uint64_t seed) {
  return kernels::mc_dropout_proba(model, x, passes, seed);
}

void save_dynamics(const DynamicsRecord& rec, const std::filesystem::path& dir, std::uint64_t model_seed,
                   std::uint64_t train_seed) {
  nlohmann::json header = {
      {"epochs", rec.epochs},
      {"samples", rec.samples},
      {"classes", rec.classes},
      {"inputs", rec.inputs},
      {"embedding_width", rec.embeddings.cols()},
      {"input_grad_epochs", rec.input_grad_epochs},
      {"model_seed", model_seed},
      {"train_seed", train_seed},
      {"files",
       {{"probs.csv", "epochs*samples rows: epoch,sample_id,p_0..p_{k-1}"},
        {"logits.csv", "epochs*samples rows: epoch,sample_id,z_0..z_{k-1}"},
        {"losses.csv", "epochs*samples rows: epoch,sample_id,loss"},
        {"correct.csv", "epochs*samples rows: epoch,sample_id,correct"},
        {"grad_sq_norm.csv", "epochs*samples rows: epoch,sample_id,grad_sq_norm (absent if not recorded)"},
        {"embeddings.csv", "samples rows: sample_id,e_0..e_{w-1}"},
        {"input_grads.csv", "checkpoints*samples rows: checkpoint,sample_id,g_0..g_{d-1}"}}},
  };
  io::write_file_atomic(dir / "header.json", header.dump(2) + "\n");
  io::write_file_atomic(dir / "probs.csv", tensor_csv(rec.probs, "epoch", "p_"));
  io::write_file_atomic(dir / "logits.csv", tensor_csv(rec.logits, "epoch", "z_"));
  io::write_file_atomic(dir / "losses.csv", epoch_matrix_csv(rec.losses, "loss"));
  {
    std::string out = "epoch,sample_id,correct\n";
    for (std::size_t t = 0; t < rec.epochs; ++t)
      for (std::size_t i = 0; i < rec.samples; ++i)
        out += std::to_string(t) + "," + std::to_string(i) + "," + (rec.is_correct(t, i) ? "1" : "0") + "\n";
    io::write_file_atomic(dir / "correct.csv", out);
  }
  if (!rec.grad_sq_norm.empty()) io::write_file_atomic(dir / "grad_sq_norm.csv", epoch_matrix_csv(rec.grad_sq_norm, "grad_sq_norm"));
  {
    std::string out = header_row({"sample_id"}, "e_", rec.embeddings.cols());
    for (std::size_t i = 0; i < rec.embeddings.rows(); ++i) {
      out += std::to_string(i);
      for (const double v : rec.embeddings.row(i)) out += "," + io::format_double(v);
      out += "\n";
    }
    io::write_file_atomic(dir / "embeddings.csv", out);
  }
  io::write_file_atomic(dir / "input_grads.csv", tensor_csv(rec.input_grads, "checkpoint", "g_"));
}

DynamicsRecord load_dynamics(const std::filesystem::path& dir) {
  const auto header = nlohmann::json::parse(io::read_file(dir / "header.json"));
  DynamicsRecord rec;
  rec.epochs = header.at("epochs").get<std::size_t>();
  rec.samples = header.at("samples").get<std::size_t>();
  rec.classes = header.at("classes").get<std::size_t>();
  rec.inputs = header.at("inputs").get<std::size_t>();
  rec.input_grad_epochs = header.at("input_grad_epochs").get<std::vector<std::size_t>>();

  rec.probs = Tensor3(rec.epochs, rec.samples, rec.classes);
  fill_tensor(rec.probs, read_numeric_rows(dir / "probs.csv"), 2);
  rec.logits = Tensor3(rec.epochs, rec.samples, rec.classes);
  fill_tensor(rec.logits, read_numeric_rows(dir / "logits.csv"), 2);
  rec.losses = Matrix(rec.epochs, rec.samples);
  for (const auto& row : read_numeric_rows(dir / "losses.csv"))
    rec.losses(static_cast<std::size_t>(row[0]), static_cast<std::size_t>(row[1])) = row[2];
  rec.correct.assign(rec.epochs * rec.samples, 0);
  for (const auto& row : read_numeric_rows(dir / "correct.csv"))
    rec.correct[static_cast<std::size_t>(row[0]) * rec.samples + static_cast<std::size_t>(row[1])] = row[2] != 0.0;
  if (std::filesystem::exists(dir / "grad_sq_norm.csv")) {
    rec.grad_sq_norm = Matrix(rec.epochs, rec.samples);
    for (const auto& row : read_numeric_rows(dir / "grad_sq_norm.csv"))
      rec.grad_sq_norm(static_cast<std::size_t>(row[0]), static_cast<std::size_t>(row[1])) = row[2];
  }
  rec.embeddings = Matrix(rec.samples, header.at("embedding_width").get<std::size_t>());
  for (const auto& row : read_numeric_rows(dir / "embeddings.csv")) {
    auto dst = rec.embeddings.row(static_cast<std::size_t>(row[0]));
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = row[1 + c];
  }
  rec.input_grads = Tensor3(rec.input_grad_epochs.size(), rec.samples, rec.inputs);
  fill_tensor(rec.input_grads, read_numeric_rows(dir / "input_grads.csv"), 2);
  return rec;
}

}  // namespace hardbench
