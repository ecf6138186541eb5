#include "costsens/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "costsens/error.hpp"

namespace costsens {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.emplace_back(trim(cell));
  return cells;
}

std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

[[noreturn]] void parse_error(std::size_t row, const std::string& column, std::string_view cell,
                              const std::string& why) {
  std::ostringstream os;
  os << "row " << row << ", column '" << column << "': " << why;
  if (!cell.empty()) os << " ('" << cell << "')";
  fail(ErrorCode::Parse, os.str());
}

struct ColumnPlan {
  std::size_t cost, time, event, treatment;
  // Numeric covariate columns and categorical expansions, in output order.
  struct Covariate {
    std::size_t column;
    std::string name;
    std::optional<std::string> level;  // set for an indicator column
  };
  std::vector<Covariate> covariates;
};

std::size_t require_column(const std::vector<std::string>& header, const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) fail(ErrorCode::Schema, "missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

CostDataset::CostDataset(std::vector<CostRecord> records, std::vector<std::string> covariate_names)
    : records_(std::move(records)), names_(std::move(covariate_names)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    const std::string where = "record " + std::to_string(i + 1) + ": ";
    if (!(r.cost >= 0.0) || !std::isfinite(r.cost)) fail(ErrorCode::InvalidArgument, where + "cost must be a finite value >= 0");
    if (!(r.time > 0.0) || !std::isfinite(r.time)) fail(ErrorCode::InvalidArgument, where + "time must be a finite value > 0");
    if (r.treatment != 0 && r.treatment != 1) fail(ErrorCode::InvalidArgument, where + "treatment must be 0 or 1");
    if (r.covariates.size() != names_.size())
      fail(ErrorCode::InvalidArgument, where + "covariate vector length differs from covariate names");
    for (double z : r.covariates)
      if (!std::isfinite(z)) fail(ErrorCode::InvalidArgument, where + "non-finite covariate");
  }
}

std::size_t CostDataset::count_arm(int treatment) const noexcept {
  return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(),
                                                [&](const CostRecord& r) { return r.treatment == treatment; }));
}

std::size_t CostDataset::count_uncensored() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [](const CostRecord& r) { return r.uncensored; }));
}

double CostDataset::censoring_rate() const noexcept {
  if (records_.empty()) return 0.0;
  return 1.0 - static_cast<double>(count_uncensored()) / static_cast<double>(records_.size());
}

std::optional<std::size_t> CostDataset::covariate_index(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

CostDataset parse_dataset(const std::string& text, const ColumnMapping& mapping) {
  std::vector<std::vector<std::string>> rows;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      rows.push_back(split_csv_line(line));
    }
  }
  if (rows.empty()) fail(ErrorCode::EmptyDataset, "input contains no rows");

  std::vector<std::string> header;
  std::size_t first_data = 0;
  ColumnPlan plan{};
  if (mapping.has_header) {
    header = rows.front();
    first_data = 1;
    plan.cost = require_column(header, mapping.cost);
    plan.time = require_column(header, mapping.time);
    plan.event = require_column(header, mapping.event);
    plan.treatment = require_column(header, mapping.treatment);
    const std::set<std::size_t> reserved{plan.cost, plan.time, plan.event, plan.treatment};
    for (const auto& name : mapping.categorical) require_column(header, name);

    std::vector<std::size_t> columns;
    if (mapping.covariates.empty()) {
      for (std::size_t c = 0; c < header.size(); ++c)
        if (!reserved.count(c)) columns.push_back(c);
    } else {
      for (const auto& name : mapping.covariates) columns.push_back(require_column(header, name));
    }
    for (std::size_t c : columns) {
      const bool categorical =
          std::find(mapping.categorical.begin(), mapping.categorical.end(), header[c]) != mapping.categorical.end();
      if (!categorical) {
        plan.covariates.push_back({c, header[c], std::nullopt});
        continue;
      }
      std::set<std::string> levels;
      for (std::size_t r = first_data; r < rows.size(); ++r)
        if (c < rows[r].size() && !rows[r][c].empty()) levels.insert(rows[r][c]);
      // First level (sorted) is the reference and gets no indicator.
      bool reference = true;
      for (const auto& level : levels) {
        if (reference) {
          reference = false;
          continue;
        }
        plan.covariates.push_back({c, header[c] + "=" + level, level});
      }
    }
  } else {
    if (!mapping.categorical.empty())
      fail(ErrorCode::Config, "categorical expansion requires a header row");
    plan.cost = mapping.cost_index;
    plan.time = mapping.time_index;
    plan.event = mapping.event_index;
    plan.treatment = mapping.treatment_index;
    for (std::size_t k = 0; k < mapping.covariate_indices.size(); ++k)
      plan.covariates.push_back({mapping.covariate_indices[k], "z" + std::to_string(k + 1), std::nullopt});
    header.resize(rows.front().size());
    for (std::size_t c = 0; c < header.size(); ++c) header[c] = "column " + std::to_string(c + 1);
    for (const auto& cov : plan.covariates)
      if (cov.column < header.size()) header[cov.column] = cov.name;
  }

  if (rows.size() <= first_data) fail(ErrorCode::EmptyDataset, "input contains a header but no records");

  auto column_name = [&](std::size_t c) { return c < header.size() ? header[c] : "column " + std::to_string(c + 1); };

  std::vector<CostRecord> records;
  records.reserve(rows.size() - first_data);
  for (std::size_t r = first_data; r < rows.size(); ++r) {
    const std::size_t row_number = r - first_data + 1;
    const auto& cells = rows[r];
    auto cell = [&](std::size_t c) -> std::string_view {
      if (c >= cells.size() || cells[c].empty()) parse_error(row_number, column_name(c), {}, "missing value");
      return cells[c];
    };
    auto real = [&](std::size_t c) {
      auto s = cell(c);
      auto v = parse_real(s);
      if (!v) parse_error(row_number, column_name(c), s, "not a real number");
      return *v;
    };
    auto binary = [&](std::size_t c) {
      auto s = cell(c);
      auto v = parse_real(s);
      if (!v || (*v != 0.0 && *v != 1.0)) parse_error(row_number, column_name(c), s, "expected 0 or 1");
      return static_cast<int>(*v);
    };

    CostRecord rec;
    rec.cost = real(plan.cost);
    if (rec.cost < 0.0) parse_error(row_number, column_name(plan.cost), cell(plan.cost), "cost must be >= 0");
    rec.time = real(plan.time);
    if (!(rec.time > 0.0)) parse_error(row_number, column_name(plan.time), cell(plan.time), "time must be > 0");
    rec.uncensored = binary(plan.event) == 1;
    rec.treatment = binary(plan.treatment);
    rec.covariates.reserve(plan.covariates.size());
    for (const auto& cov : plan.covariates) {
      if (cov.level) {
        rec.covariates.push_back(cell(cov.column) == *cov.level ? 1.0 : 0.0);
      } else {
        rec.covariates.push_back(real(cov.column));
      }
    }
    records.push_back(std::move(rec));
  }

  std::vector<std::string> names;
  names.reserve(plan.covariates.size());
  for (const auto& cov : plan.covariates) names.push_back(cov.name);
  return CostDataset(std::move(records), std::move(names));
}

CostDataset load_dataset(const std::filesystem::path& path, const ColumnMapping& mapping) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    fail(ErrorCode::InputNotFound, "input file not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str(), mapping);
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) fail(ErrorCode::Io, "cannot format number");
  return std::string(buf.data(), ptr);
}

std::string format_dataset(const CostDataset& dataset) {
  std::string out = "cost,time,event,treat";
  for (const auto& name : dataset.covariate_names()) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (const auto& r : dataset.records()) {
    out += format_double(r.cost);
    out += ',';
    out += format_double(r.time);
    out += r.uncensored ? ",1," : ",0,";
    out += r.treatment == 1 ? '1' : '0';
    for (double z : r.covariates) {
      out += ',';
      out += format_double(z);
    }
    out += '\n';
  }
  return out;
}

void save_dataset(const CostDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << format_dataset(dataset);
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

CostDataset zero_cost_shift(const CostDataset& dataset) {
  double min_positive = std::numeric_limits<double>::infinity();
  for (const auto& r : dataset.records())
    if (r.cost > 0.0) min_positive = std::min(min_positive, r.cost);
  if (!std::isfinite(min_positive)) fail(ErrorCode::NoPositiveCost, "no record has a positive cost");

  const double shift = min_positive / 2.0;
  std::vector<CostRecord> shifted = dataset.records();
  for (auto& r : shifted) r.cost += shift;
  return CostDataset(std::move(shifted), dataset.covariate_names());
}

}  // namespace costsens
