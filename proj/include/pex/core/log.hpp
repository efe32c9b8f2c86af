#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pex/core/types.hpp"

namespace pex {

struct Violation {
  std::size_t record = 0;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

/// Every invariant violation in `log`, tagged with the record index.
ValidationReport validate_log(const LogDataset& log, bool allow_empty = true);

/// Sample ATE of each arm against control. Throws if an arm has no records.
AteMatrix compute_ate(const LogDataset& log);

struct LogSplit {
  LogDataset main;
  LogDataset holdout;
};

/// Random partition by unit with exactly round(fraction * N) holdout units.
/// Both halves keep the input's record order.
LogSplit split_log(const LogDataset& log, double holdout_fraction, std::uint64_t seed);

/// Records of arm `arm` as row-major covariates plus one outcome column.
struct ArmSubset {
  std::vector<double> x;  // rows * d
  std::vector<std::vector<double>> y;  // per outcome
  std::size_t rows = 0;
};
ArmSubset arm_subset(const LogDataset& log, int arm);

/// Row-major N x d covariate matrix of all records.
std::vector<double> covariate_matrix(const LogDataset& log);

// CSV log file: header `unit_id,arm,propensity,x_0..x_{d-1},y_0..y_{m-1}`.
void write_log_csv(std::ostream& os, const LogDataset& log);
void write_log_csv(const std::string& path, const LogDataset& log);
/// `n` must be supplied since a log need not contain every arm.
LogDataset read_log_csv(std::istream& is, int n, std::vector<OutcomeSpec> specs = {});
LogDataset read_log_csv(const std::string& path, int n, std::vector<OutcomeSpec> specs = {});

}  // namespace pex
