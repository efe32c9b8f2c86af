#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pex/core/types.hpp"

namespace pex::testing {

// Log with one covariate per record; rows are (arm, outcomes...).
inline LogDataset make_log(int n, std::size_t m, const std::vector<std::pair<int, std::vector<double>>>& rows,
                           double propensity = -1.0) {
  LogDataset log;
  log.n = n;
  log.m = m;
  log.d = 1;
  log.outcome_specs = default_outcome_specs(m);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    UnitRecord r;
    r.unit_id = "u" + std::to_string(i);
    r.covariates = {static_cast<double>(i)};
    r.arm = rows[i].first;
    r.propensity = propensity > 0 ? propensity : 1.0 / n;
    r.outcomes = rows[i].second;
    log.records.push_back(std::move(r));
  }
  return log;
}

}  // namespace pex::testing
