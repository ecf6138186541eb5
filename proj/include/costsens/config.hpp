#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace costsens {

/// Plain-text configuration: "[section]" headers followed by "key = value"
/// lines. '#' starts a comment. Keys are lower-cased; values keep their case.
struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct ConfigSection {
  std::string name;
  int line = 0;
  std::vector<ConfigEntry> entries;

  /// Last value for key, or nullptr.
  const ConfigEntry* find(std::string_view key) const;
};

/// Throws Error{Config} with the line number on malformed input.
std::vector<ConfigSection> parse_config(const std::string& text);

/// Reads a file; Error{InputNotFound} when it does not exist.
std::string read_text_file(const std::filesystem::path& path);

/// One point of an expanded section: (key, value) pairs in document order.
using ConfigPoint = std::vector<std::pair<std::string, std::string>>;

/// Cartesian product of comma-separated value lists, first key outermost.
/// A key "a/b" with values "1/2, 3/4" varies a and b together.
std::vector<ConfigPoint> expand_section(const ConfigSection& section);

/// Splits on sep and trims whitespace around each item.
std::vector<std::string> split_trimmed(std::string_view text, char sep);

/// Whole-string floating-point parse; Error{Config} naming `what` otherwise.
double parse_config_number(std::string_view text, std::string_view what);

/// Rejects keys outside `allowed`, listing every offender in one message.
void check_known_keys(const ConfigSection& section, const std::vector<std::string>& allowed);

}  // namespace costsens
