#include "hardbench/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "json.hpp"

#include "hardbench/io.hpp"
#include "hardbench/metrics.hpp"

namespace hardbench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t index_of(std::span<const Method> methods, Method m) {
  const auto it = std::find(methods.begin(), methods.end(), m);
  return it == methods.end() ? methods.size() : static_cast<std::size_t>(it - methods.begin());
}

}  // namespace

EvalReport evaluate(const SetupDescriptor& setup, std::span<const ScoreVector> scores, const FlagSet& flags) {
  if (flags.count == 0) throw std::invalid_argument("no hard samples flagged; detection metrics are undefined");
  if (flags.count == flags.flags.size())
    throw std::invalid_argument("every sample is flagged; detection metrics are undefined");
  EvalReport report{setup, {}};
  std::vector<double> auprcs;
  for (const auto& s : scores) {
    if (s.oriented.size() != flags.flags.size())
      throw std::invalid_argument(std::string(method_name(s.method)) + ": score length does not match flags");
    MethodMetrics m;
    m.method = s.method;
    m.d_auprc = auprc(s.oriented, flags.flags);
    m.d_auroc = auroc(s.oriented, flags.flags);
    auprcs.push_back(-m.d_auprc);
    report.methods.push_back(m);
  }
  const auto ranks = average_ranks(auprcs);
  for (std::size_t i = 0; i < ranks.size(); ++i) report.methods[i].rank = ranks[i];
  return report;
}

StabilityReport stability_from_scores(std::span<const Method> methods,
                                      const std::vector<std::vector<ScoreVector>>& runs) {
  if (runs.size() < 2) throw std::invalid_argument("stability needs at least two runs");
  StabilityReport out;
  out.methods.assign(methods.begin(), methods.end());
  out.runs = runs.size();
  for (std::size_t m = 0; m < methods.size(); ++m) {
    std::vector<std::optional<double>> pairs;
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t a = 0; a < runs.size(); ++a)
      for (std::size_t b = a + 1; b < runs.size(); ++b) {
        const auto rho = spearman(runs[a].at(m).oriented, runs[b].at(m).oriented);
        if (rho) {
          sum += *rho;
          ++defined;
        }
        pairs.push_back(rho);
      }
    out.pair_rho.push_back(std::move(pairs));
    out.mean_rho.push_back(defined ? std::optional<double>(sum / static_cast<double>(defined)) : std::nullopt);
  }
  return out;
}

Heatmap aggregate_sweep(std::span<const EvalReport> reports, std::span<const Method> method_order,
                        std::span<const double> p_values) {
  Heatmap h;
  h.methods.assign(method_order.begin(), method_order.end());
  h.p_values.assign(p_values.begin(), p_values.end());
  for (const auto& r : reports) {
    if (h.hardness.empty()) h.hardness = r.setup.hardness;
    if (r.setup.hardness != h.hardness) throw std::invalid_argument("aggregate_sweep: reports mix hardness kinds");
    h.p_values.push_back(r.setup.p);
  }
  std::sort(h.p_values.begin(), h.p_values.end());
  h.p_values.erase(std::unique(h.p_values.begin(), h.p_values.end()), h.p_values.end());

  const std::size_t rows = h.methods.size();
  const std::size_t cols = h.p_values.size();
  // Collect values per cell first so the mean is a plain left-to-right sum
  // in report order, reproducible from the metrics CSV.
  std::vector<std::vector<double>> auprc(rows * cols), auroc(rows * cols);
  for (const auto& r : reports) {
    const auto c = static_cast<std::size_t>(
        std::lower_bound(h.p_values.begin(), h.p_values.end(), r.setup.p) - h.p_values.begin());
    for (const auto& m : r.methods) {
      const std::size_t row = index_of(method_order, m.method);
      if (row == rows) continue;
      auprc[row * cols + c].push_back(m.d_auprc);
      auroc[row * cols + c].push_back(m.d_auroc);
    }
  }
  auto moments = [](const std::vector<double>& v, double& mean, double& sd) {
    if (v.empty()) {
      mean = sd = kNaN;
      return;
    }
    double s = 0.0;
    for (const double x : v) s += x;
    mean = s / static_cast<double>(v.size());
    double ss = 0.0;
    for (const double x : v) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(v.size()));
  };
  h.auprc_mean = Matrix(rows, cols);
  h.auprc_std = Matrix(rows, cols);
  h.auroc_mean = Matrix(rows, cols);
  h.auroc_std = Matrix(rows, cols);
  h.counts.assign(rows, std::vector<std::size_t>(cols, 0));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      moments(auprc[i * cols + j], h.auprc_mean(i, j), h.auprc_std(i, j));
      moments(auroc[i * cols + j], h.auroc_mean(i, j), h.auroc_std(i, j));
      h.counts[i][j] = auprc[i * cols + j].size();
    }
  return h;
}

std::string heatmap_csv(const Heatmap& heatmap, const Matrix& values) {
  std::string out = "method";
  for (const double p : heatmap.p_values) out += "," + io::format_double(p);
  out += "\n";
  for (std::size_t i = 0; i < heatmap.methods.size(); ++i) {
    out += method_name(heatmap.methods[i]);
    for (std::size_t j = 0; j < heatmap.p_values.size(); ++j) out += "," + io::format_double(values(i, j));
    out += "\n";
  }
  return out;
}

std::string metrics_csv_rows(std::span<const EvalReport> reports) {
  std::string out;
  for (const auto& r : reports)
    for (const auto& m : r.methods) {
      out += io::csv_escape(r.setup.setup_id) + "," + io::csv_escape(r.setup.dataset) + "," +
             io::csv_escape(r.setup.hardness) + "," + io::format_double(r.setup.p) + "," + std::to_string(r.setup.seed) +
             "," + std::string(method_name(m.method)) + "," + io::format_double(m.d_auprc) + "," +
             io::format_double(m.d_auroc) + "," + io::format_double(m.rank) + "\n";
    }
  return out;
}

Matrix metric_matrix(std::span<const EvalReport> reports, std::span<const Method> methods) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : reports) {
    std::vector<double> row(methods.size(), kNaN);
    for (const auto& m : r.methods) {
      const std::size_t j = index_of(methods, m.method);
      if (j < methods.size()) row[j] = m.d_auprc;
    }
    if (std::none_of(row.begin(), row.end(), [](double v) { return std::isnan(v); })) rows.push_back(std::move(row));
  }
  Matrix out(rows.size(), methods.size());
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), out.row(i).begin());
  return out;
}

SignificanceResult significance(std::span<const EvalReport> reports, std::span<const Method> methods, double alpha) {
  const Matrix metrics = metric_matrix(reports, methods);
  SignificanceResult out;
  out.methods.assign(methods.begin(), methods.end());
  out.setups = metrics.rows();
  out.friedman = friedman(ranks_from_metrics(metrics));
  out.posthoc = pairwise_posthoc(metrics, alpha);
  out.wins = win_matrix(metrics);
  return out;
}

std::string significance_json(const SignificanceResult& r) {
  using nlohmann::ordered_json;
  ordered_json j;
  std::vector<std::string> names;
  for (const Method m : r.methods) names.emplace_back(method_name(m));
  j["metric"] = "d_auprc";
  j["setups"] = r.setups;
  j["methods"] = names;
  ordered_json ranks = ordered_json::object();
  for (std::size_t i = 0; i < names.size(); ++i) ranks[names[i]] = r.friedman.mean_ranks[i];
  j["mean_ranks"] = ranks;
  j["friedman"] = {{"statistic", r.friedman.statistic}, {"df", r.friedman.df}, {"p_value", r.friedman.p_value}};
  j["alpha"] = r.posthoc.alpha;
  ordered_json pv = ordered_json::array();
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::vector<double> row(r.posthoc.p_values.row(i).begin(), r.posthoc.p_values.row(i).end());
    pv.push_back(row);
  }
  j["pairwise_p_values"] = pv;
  ordered_json linked = ordered_json::array();
  for (const auto& [a, b] : r.posthoc.linked_pairs) linked.push_back({names[a], names[b]});
  j["not_different_pairs"] = linked;
  j["wins"] = r.wins;
  return j.dump(2) + "\n";
}

}  // namespace hardbench
