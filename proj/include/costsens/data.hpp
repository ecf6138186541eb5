#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace costsens {

/// One subject: total cost, follow-up time, event indicator, arm, covariates.
struct CostRecord {
  double cost = 0.0;
  double time = 1.0;
  bool uncensored = true;  // event = 1
  int treatment = 0;       // 0 control, 1 treated
  std::vector<double> covariates;
};

/// Records in file order plus covariate labels. Immutable once built.
class CostDataset {
 public:
  CostDataset() = default;

  /// Validates record invariants (cost >= 0, time > 0, treatment in {0,1},
  /// uniform covariate length matching the names).
  CostDataset(std::vector<CostRecord> records, std::vector<std::string> covariate_names);

  const std::vector<CostRecord>& records() const noexcept { return records_; }
  const std::vector<std::string>& covariate_names() const noexcept { return names_; }
  std::size_t size() const noexcept { return records_.size(); }
  std::size_t covariate_count() const noexcept { return names_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const CostRecord& operator[](std::size_t i) const { return records_[i]; }

  std::size_t count_arm(int treatment) const noexcept;
  std::size_t count_uncensored() const noexcept;
  double censoring_rate() const noexcept;

  /// Index of a covariate by label; nullopt if absent.
  std::optional<std::size_t> covariate_index(const std::string& name) const;

 private:
  std::vector<CostRecord> records_;
  std::vector<std::string> names_;
};

/// Column mapping for CSV ingestion.
///
/// With a header row, columns are matched by name; covariates default to every
/// column not claimed by cost/time/event/treatment, in file order. Without a
/// header, `*_index` fields give zero-based positions and `covariate_indices`
/// lists the covariate columns (names default to z1..zk).
struct ColumnMapping {
  bool has_header = true;
  std::string cost = "cost";
  std::string time = "time";
  std::string event = "event";
  std::string treatment = "treat";
  std::vector<std::string> covariates;   // empty: all remaining columns
  std::vector<std::string> categorical;  // expanded to indicator columns

  std::size_t cost_index = 0;
  std::size_t time_index = 1;
  std::size_t event_index = 2;
  std::size_t treatment_index = 3;
  std::vector<std::size_t> covariate_indices;
};

CostDataset load_dataset(const std::filesystem::path& path, const ColumnMapping& mapping = {});
CostDataset parse_dataset(const std::string& text, const ColumnMapping& mapping = {});

/// Shortest round-trip decimal representation; load(save(d)) == d bit for bit.
std::string format_dataset(const CostDataset& dataset);
void save_dataset(const CostDataset& dataset, const std::filesystem::path& path);

/// Adds half of the smallest positive cost to every record.
CostDataset zero_cost_shift(const CostDataset& dataset);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace costsens
