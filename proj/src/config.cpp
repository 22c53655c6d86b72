#include "hardbench/config.hpp"

#include <charconv>
#include <cstdint>
#include <stdexcept>

#include "hardbench/io.hpp"

namespace hardbench {

namespace {

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  const std::string t = io::trim(text);
  T value{};
  const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw std::invalid_argument(std::string(what) + ": '" + t + "' is not a valid number");
  return value;
}

}  // namespace

ConfigMap parse_config(std::string_view text) {
  ConfigMap out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = std::min(text.find('\n', start), text.size());
    const std::string line = io::trim(text.substr(start, end - start));
    ++line_no;
    start = end + 1;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = io::trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    out[key] = io::trim(line.substr(eq + 1));
  }
  return out;
}

ConfigMap load_config(const std::filesystem::path& path) { return parse_config(io::read_file(path)); }

std::string render_config(const ConfigMap& config) {
  std::string out;
  for (const auto& [k, v] : config) out += k + " = " + v + "\n";
  return out;
}

double config_double(const ConfigMap& c, const std::string& key, double fallback) {
  const auto it = c.find(key);
  return it == c.end() ? fallback : parse_number<double>(it->second, key);
}

std::size_t config_size(const ConfigMap& c, const std::string& key, std::size_t fallback) {
  const auto it = c.find(key);
  return it == c.end() ? fallback : parse_number<std::size_t>(it->second, key);
}

std::uint64_t config_u64(const ConfigMap& c, const std::string& key, std::uint64_t fallback) {
  const auto it = c.find(key);
  return it == c.end() ? fallback : parse_number<std::uint64_t>(it->second, key);
}

bool config_bool(const ConfigMap& c, const std::string& key, bool fallback) {
  const auto it = c.find(key);
  if (it == c.end()) return fallback;
  if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
  if (it->second == "false" || it->second == "0" || it->second == "no") return false;
  throw std::invalid_argument(key + ": expected true or false, got '" + it->second + "'");
}

std::string config_string(const ConfigMap& c, const std::string& key, const std::string& fallback) {
  const auto it = c.find(key);
  return it == c.end() ? fallback : it->second;
}

std::vector<std::string> split_list(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(sep, start), text.size());
    std::string item = io::trim(text.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    start = end + 1;
  }
  return out;
}

std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<double>(item, "number list"));
  return out;
}

std::vector<std::uint64_t> parse_u64_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<std::uint64_t>(item, "integer list"));
  return out;
}

std::vector<std::size_t> parse_size_list(std::string_view text) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<std::size_t>(item, "integer list"));
  return out;
}

}  // namespace hardbench
