#include "pex/core/types.hpp"

#include <string>

namespace pex {

std::string_view to_string(Direction d) {
  return d == Direction::maximize ? "maximize" : "minimize";
}

Direction parse_direction(std::string_view s) {
  if (s == "maximize") return Direction::maximize;
  if (s == "minimize") return Direction::minimize;
  throw Error("unknown outcome direction '" + std::string(s) + "'");
}

LogDataset LogDataset::empty_like() const {
  LogDataset out;
  out.n = n;
  out.m = m;
  out.d = d;
  out.outcome_specs = outcome_specs;
  return out;
}

std::vector<OutcomeSpec> default_outcome_specs(std::size_t m) {
  std::vector<OutcomeSpec> specs;
  specs.reserve(m);
  for (std::size_t j = 0; j < m; ++j) specs.push_back({"y_" + std::to_string(j), Direction::maximize});
  return specs;
}

EffectMatrix::EffectMatrix(int n, std::size_t m, double fill)
    : n_(n), m_(m), data_(static_cast<std::size_t>(n < 0 ? 0 : n) * m, fill) {
  if (n < 1) throw Error("EffectMatrix needs at least one arm");
}

double EffectMatrix::at(int arm, std::size_t outcome) const {
  if (arm < 1 || arm > n_ || outcome >= m_) {
    throw Error("EffectMatrix index (" + std::to_string(arm) + ", " + std::to_string(outcome) +
                ") out of range");
  }
  return (*this)(arm, outcome);
}

}  // namespace pex
