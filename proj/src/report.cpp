#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "hardbench/io.hpp"
#include "hardbench/runner.hpp"

namespace hardbench {

namespace fs = std::filesystem;

namespace {

struct HeatmapTable {
  std::string kind;
  std::vector<std::string> p_labels;
  std::vector<std::string> methods;
  std::vector<std::vector<double>> values;  // NaN = missing
};

HeatmapTable read_heatmap(const fs::path& path, const std::string& kind) {
  std::istringstream in(io::read_file(path));
  std::string line;
  HeatmapTable t;
  t.kind = kind;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty heatmap");
  auto header = io::split_csv_line(line);
  t.p_labels.assign(header.begin() + 1, header.end());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = io::split_csv_line(line);
    if (fields.size() != header.size()) throw std::runtime_error(path.string() + ": ragged row");
    t.methods.push_back(fields[0]);
    std::vector<double> row;
    for (std::size_t j = 1; j < fields.size(); ++j)
      row.push_back(fields[j] == "NA" ? std::nan("") : std::stod(fields[j]));
    t.values.push_back(std::move(row));
  }
  return t;
}

// Piecewise-linear blend through a few viridis anchors.
std::string color_for(double v) {
  static constexpr std::array<std::array<double, 3>, 5> stops{{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  const double x = std::clamp(v, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(x), stops.size() - 2);
  const double f = x - static_cast<double>(i);
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                static_cast<int>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                static_cast<int>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (const char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else if (c == '"') out += "&quot;";
    else out += c;
  }
  return out;
}

std::string render_svg(const HeatmapTable& t) {
  constexpr int cell_w = 70, cell_h = 26, left = 150, top = 50;
  const int width = left + cell_w * static_cast<int>(t.p_labels.size()) + 20;
  const int height = top + cell_h * static_cast<int>(t.methods.size()) + 20;
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
                  std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<defs><pattern id=\"missing\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" "
       "patternTransform=\"rotate(45)\"><rect width=\"6\" height=\"6\" fill=\"#ffffff\"/>"
       "<line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#888888\" stroke-width=\"2\"/></pattern></defs>\n";
  s += "<text x=\"" + std::to_string(left) + "\" y=\"18\" font-weight=\"bold\">D-AUPRC: " + xml_escape(t.kind) +
       "</text>\n";
  for (std::size_t j = 0; j < t.p_labels.size(); ++j)
    s += "<text x=\"" + std::to_string(left + cell_w * static_cast<int>(j) + cell_w / 2) + "\" y=\"" +
         std::to_string(top - 8) + "\" text-anchor=\"middle\">p=" + xml_escape(t.p_labels[j]) + "</text>\n";
  for (std::size_t i = 0; i < t.methods.size(); ++i) {
    const int y = top + cell_h * static_cast<int>(i);
    s += "<text x=\"" + std::to_string(left - 8) + "\" y=\"" + std::to_string(y + cell_h / 2 + 4) +
         "\" text-anchor=\"end\">" + xml_escape(t.methods[i]) + "</text>\n";
    for (std::size_t j = 0; j < t.p_labels.size(); ++j) {
      const int x = left + cell_w * static_cast<int>(j);
      const double v = t.values[i][j];
      const bool missing = std::isnan(v);
      s += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" + std::to_string(cell_w) +
           "\" height=\"" + std::to_string(cell_h) + "\" fill=\"" + (missing ? "url(#missing)" : color_for(v)) +
           "\" stroke=\"#ffffff\"/>\n";
      const std::string label = missing ? "NA" : io::format_fixed(v, 3);
      const std::string ink = missing || v > 0.6 ? "#000000" : "#ffffff";
      s += "<text x=\"" + std::to_string(x + cell_w / 2) + "\" y=\"" + std::to_string(y + cell_h / 2 + 4) +
           "\" text-anchor=\"middle\" fill=\"" + ink + "\">" + label + "</text>\n";
    }
  }
  return s + "</svg>\n";
}

std::string markdown_table(const HeatmapTable& t) {
  std::string s = "| method |";
  for (const auto& p : t.p_labels) s += " p=" + p + " |";
  s += "\n|---|";
  for (std::size_t j = 0; j < t.p_labels.size(); ++j) s += "---:|";
  s += "\n";
  for (std::size_t i = 0; i < t.methods.size(); ++i) {
    s += "| " + t.methods[i] + " |";
    for (const double v : t.values[i]) s += " " + (std::isnan(v) ? std::string("missing") : io::format_fixed(v, 3)) + " |";
    s += "\n";
  }
  return s;
}

}  // namespace

void emit_report(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::invalid_argument(dir.string() + " is not a directory");
  const std::string prefix = "heatmap_", suffix = "_auprc.csv";
  std::vector<std::pair<std::string, fs::path>> heatmaps;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > prefix.size() + suffix.size() && name.starts_with(prefix) && name.ends_with(suffix))
      heatmaps.emplace_back(name.substr(prefix.size(), name.size() - prefix.size() - suffix.size()), entry.path());
  }
  if (heatmaps.empty()) throw std::invalid_argument(dir.string() + ": no heatmap results to report");
  std::sort(heatmaps.begin(), heatmaps.end());

  std::string md = "# Hardness detection report\n\n";
  if (fs::exists(dir / "setups.csv")) {
    std::istringstream in(io::read_file(dir / "setups.csv"));
    std::string line;
    std::getline(in, line);
    std::size_t ok = 0, skipped = 0, failed = 0;
    std::vector<std::string> problems;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = io::split_csv_line(line);
      if (f.size() < 3) continue;
      if (f[1] == "ok") ++ok;
      else {
        (f[1] == "skipped" ? skipped : failed)++;
        problems.push_back("- `" + f[0] + "` " + f[1] + ": " + f[2]);
      }
    }
    md += "Setups: " + std::to_string(ok) + " ok, " + std::to_string(skipped) + " skipped, " +
          std::to_string(failed) + " failed.\n\n";
    for (const auto& p : problems) md += p + "\n";
    if (!problems.empty()) md += "\n";
  }

  md += "## D-AUPRC by hardness kind\n\nMean over seeds; missing cells are hatched in the SVGs.\n\n";
  for (const auto& [kind, path] : heatmaps) {
    const HeatmapTable t = read_heatmap(path, kind);
    const std::string svg = "heatmap_" + kind + ".svg";
    io::write_file_atomic(dir / svg, render_svg(t));
    md += "### " + kind + "\n\n![" + kind + "](" + svg + ")\n\n" + markdown_table(t) + "\n";
  }

  if (fs::exists(dir / "significance.json")) {
    const auto j = nlohmann::ordered_json::parse(io::read_file(dir / "significance.json"));
    md += "## Rankings\n\n";
    if (j.contains("error")) {
      md += "Rank tests unavailable: " + j["error"].get<std::string>() + "\n";
    } else {
      std::vector<std::pair<double, std::string>> ranks;
      for (const auto& [name, r] : j["mean_ranks"].items()) ranks.emplace_back(r.get<double>(), name);
      std::stable_sort(ranks.begin(), ranks.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      md += "Mean rank by D-AUPRC over " + std::to_string(j["setups"].get<std::size_t>()) + " setups (1 = best).\n\n";
      md += "| method | mean rank |\n|---|---:|\n";
      for (const auto& [r, name] : ranks) md += "| " + name + " | " + io::format_fixed(r, 3) + " |\n";
      const auto& f = j["friedman"];
      md += "\nFriedman chi-square = " + io::format_fixed(f["statistic"].get<double>(), 3) +
            ", df = " + std::to_string(f["df"].get<std::size_t>()) +
            ", p = " + io::format_fixed(f["p_value"].get<double>(), 4) + ".\n\n";
      md += "Pairs not significantly different (Wilcoxon signed-rank, Holm, alpha = " +
            io::format_fixed(j["alpha"].get<double>(), 2) + "):\n\n";
      if (j["not_different_pairs"].empty()) md += "- none\n";
      for (const auto& pair : j["not_different_pairs"])
        md += "- " + pair[0].get<std::string>() + " / " + pair[1].get<std::string>() + "\n";
    }
  }
  io::write_file_atomic(dir / "report.md", md);
}

}  // namespace hardbench
