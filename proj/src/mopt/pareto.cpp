#include "pex/mopt/pareto.hpp"

#include <algorithm>
#include <cmath>

namespace pex::mopt {

Objectives orient(std::span<const double> values, std::span<const OutcomeSpec> specs) {
  if (values.size() != specs.size()) throw Error("orient: value count differs from outcome count");
  Objectives out(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) out[j] = direction_sign(specs[j].direction) * values[j];
  return out;
}

bool dominates(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("dominates: objective vectors differ in length");
  bool strict = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] < b[k]) return false;
    if (a[k] > b[k]) strict = true;
  }
  return strict;
}

std::vector<std::size_t> pareto_indices(std::span<const Objectives> objectives) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < objectives.size(); ++i) {
    bool keep = true;
    for (std::size_t j = 0; j < objectives.size() && keep; ++j) {
      if (j == i) continue;
      if (dominates(objectives[j], objectives[i])) keep = false;
      if (j < i && objectives[j] == objectives[i]) keep = false;
    }
    if (keep) out.push_back(i);
  }
  return out;
}

std::vector<ParetoPoint> pareto_front(const std::vector<ParetoPoint>& points) {
  auto objs = objectives_of(points);
  std::vector<ParetoPoint> out;
  for (std::size_t i : pareto_indices(objs)) out.push_back(points[i]);
  return out;
}

Objectives reference_from(std::span<const Objectives> objectives) {
  if (objectives.empty()) throw Error("reference_from: no objectives");
  const std::size_t m = objectives.front().size();
  Objectives lo(m, INFINITY), hi(m, -INFINITY);
  for (const auto& o : objectives) {
    if (o.size() != m) throw Error("reference_from: ragged objectives");
    for (std::size_t k = 0; k < m; ++k) {
      lo[k] = std::min(lo[k], o[k]);
      hi[k] = std::max(hi[k], o[k]);
    }
  }
  Objectives ref(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double range = hi[k] - lo[k];
    ref[k] = lo[k] - 0.1 * (range > 0.0 ? range : std::max(1.0, std::abs(lo[k])));
  }
  return ref;
}

std::vector<Objectives> objectives_of(const std::vector<ParetoPoint>& points) {
  std::vector<Objectives> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.objectives);
  return out;
}

}  // namespace pex::mopt
