#include "costsens/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "costsens/error.hpp"

namespace costsens {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

const ConfigEntry* ConfigSection::find(std::string_view key) const {
  for (auto it = entries.rbegin(); it != entries.rend(); ++it)
    if (it->key == key) return &*it;
  return nullptr;
}

std::vector<ConfigSection> parse_config(const std::string& text) {
  std::vector<ConfigSection> sections;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": malformed section header '" + line + "'");
      sections.push_back({lower(trim(std::string_view(line).substr(1, line.size() - 2))), line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
    if (sections.empty())
      fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": entry before any [section] header");
    ConfigEntry entry{lower(trim(std::string_view(line).substr(0, eq))), trim(std::string_view(line).substr(eq + 1)),
                      line_no};
    if (entry.key.empty()) fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": empty key");
    if (entry.value.empty())
      fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": key '" + entry.key + "' has no value");
    sections.back().entries.push_back(std::move(entry));
  }
  return sections;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    fail(ErrorCode::InputNotFound, "cannot find file '" + path.string() + "'");
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string> split_trimmed(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_config_number(std::string_view text, std::string_view what) {
  const std::string t = trim(text);
  double value = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (t.empty() || ec != std::errc{} || ptr != last || !std::isfinite(value))
    fail(ErrorCode::Config, std::string(what) + ": '" + t + "' is not a finite number");
  return value;
}

std::vector<ConfigPoint> expand_section(const ConfigSection& section) {
  std::vector<ConfigPoint> points{ConfigPoint{}};
  for (const auto& entry : section.entries) {
    const auto keys = split_trimmed(entry.key, '/');
    std::vector<ConfigPoint> choices;
    for (const auto& item : split_trimmed(entry.value, ',')) {
      const auto values = keys.size() > 1 ? split_trimmed(item, '/') : std::vector<std::string>{item};
      if (values.size() != keys.size() || item.empty())
        fail(ErrorCode::Config, "line " + std::to_string(entry.line) + ": '" + item + "' does not match key '" +
                                    entry.key + "'");
      ConfigPoint choice;
      for (std::size_t k = 0; k < keys.size(); ++k) {
        if (values[k].empty()) fail(ErrorCode::Config, "line " + std::to_string(entry.line) + ": empty value");
        choice.emplace_back(keys[k], values[k]);
      }
      choices.push_back(std::move(choice));
    }
    std::vector<ConfigPoint> next;
    next.reserve(points.size() * choices.size());
    for (const auto& p : points)
      for (const auto& c : choices) {
        ConfigPoint merged = p;
        merged.insert(merged.end(), c.begin(), c.end());
        next.push_back(std::move(merged));
      }
    points = std::move(next);
  }
  return points;
}

void check_known_keys(const ConfigSection& section, const std::vector<std::string>& allowed) {
  std::vector<std::string> unknown;
  for (const auto& entry : section.entries)
    for (const auto& key : split_trimmed(entry.key, '/'))
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end() &&
          std::find(unknown.begin(), unknown.end(), key) == unknown.end())
        unknown.push_back(key);
  if (unknown.empty()) return;
  std::string list;
  for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
  fail(ErrorCode::Config, "[" + section.name + "] (line " + std::to_string(section.line) + "): unknown keys: " + list);
}

}  // namespace costsens
