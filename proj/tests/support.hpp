#pragma once

#include <vector>

#include "costsens/data.hpp"

namespace testing {

inline costsens::CostRecord rec(double cost, double time, bool uncensored, int treat, std::vector<double> z = {}) {
  return costsens::CostRecord{cost, time, uncensored, treat, std::move(z)};
}

}  // namespace testing
