#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace hardbench {

/// Flat key=value configuration. Blank lines and lines starting with '#'
/// are ignored; later keys override earlier ones.
using ConfigMap = std::map<std::string, std::string>;

/// Throws std::invalid_argument naming the offending line.
ConfigMap parse_config(std::string_view text);
ConfigMap load_config(const std::filesystem::path& path);
std::string render_config(const ConfigMap& config);

/// Typed accessors; each throws std::invalid_argument naming the key.
double config_double(const ConfigMap& c, const std::string& key, double fallback);
std::size_t config_size(const ConfigMap& c, const std::string& key, std::size_t fallback);
std::uint64_t config_u64(const ConfigMap& c, const std::string& key, std::uint64_t fallback);
bool config_bool(const ConfigMap& c, const std::string& key, bool fallback);
std::string config_string(const ConfigMap& c, const std::string& key, const std::string& fallback);

std::vector<std::string> split_list(std::string_view text, char sep = ',');
std::vector<double> parse_double_list(std::string_view text);
std::vector<std::uint64_t> parse_u64_list(std::string_view text);
std::vector<std::size_t> parse_size_list(std::string_view text);

}  // namespace hardbench
