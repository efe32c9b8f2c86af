#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pex {

/// Raised for contract violations on public operations (bad dimensions,
/// missing arms, malformed files). Data-level problems found by
/// validate_log are reported as values instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Direction { maximize, minimize };

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view s);

/// +1 for maximize, -1 for minimize.
inline double direction_sign(Direction d) { return d == Direction::maximize ? 1.0 : -1.0; }

struct OutcomeSpec {
  std::string name;
  Direction direction = Direction::maximize;
};

/// Arm ids are 1-based; id 1 is the control arm.
struct TreatmentArm {
  int id = 1;
  std::string label;
};

struct UnitRecord {
  std::string unit_id;
  std::vector<double> covariates;
  int arm = 1;
  double propensity = 1.0;
  std::vector<double> outcomes;
};

/// Randomized-experiment log. Plain value type; operations never mutate it.
struct LogDataset {
  std::vector<UnitRecord> records;
  int n = 0;          // arms
  std::size_t m = 0;  // outcomes
  std::size_t d = 0;  // covariates
  std::vector<OutcomeSpec> outcome_specs;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  /// Same shape and outcome specs, no records.
  LogDataset empty_like() const;
};

/// Default outcome specs y_0..y_{m-1}, all maximized.
std::vector<OutcomeSpec> default_outcome_specs(std::size_t m);

/// Dense n x m table indexed by (arm id, outcome index). Arm ids are
/// 1-based, outcome indices 0-based. Used for ATE and CATE matrices.
class EffectMatrix {
 public:
  EffectMatrix() = default;
  EffectMatrix(int n, std::size_t m, double fill = 0.0);

  int arms() const { return n_; }
  std::size_t outcomes() const { return m_; }

  double& operator()(int arm, std::size_t outcome) { return data_[index(arm, outcome)]; }
  double operator()(int arm, std::size_t outcome) const { return data_[index(arm, outcome)]; }

  /// Bounds-checked access.
  double at(int arm, std::size_t outcome) const;

  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const EffectMatrix&, const EffectMatrix&) = default;

 private:
  std::size_t index(int arm, std::size_t outcome) const {
    return static_cast<std::size_t>(arm - 1) * m_ + outcome;
  }

  int n_ = 0;
  std::size_t m_ = 0;
  std::vector<double> data_;
};

/// Entry (i, j) is the sample ATE of arm i vs control on outcome j.
using AteMatrix = EffectMatrix;

}  // namespace pex
