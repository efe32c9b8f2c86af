#include "pex/mopt/hypervolume.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pex/core/diagnostics.hpp"
#include "pex/core/random.hpp"
#include "pex/kernels/kernels.hpp"

namespace pex::mopt {

namespace {

// Points are (x, y) pairs that strictly dominate the reference.
double sweep_2d(std::vector<std::pair<double, double>> pts, double rx, double ry) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second > b.second);
  });
  double volume = 0.0;
  double ceiling = ry;
  for (const auto& [x, y] : pts) {
    if (y > ceiling) {
      volume += (x - rx) * (y - ceiling);
      ceiling = y;
    }
  }
  return volume;
}

double slice_3d(const std::vector<Objectives>& pts, std::span<const double> ref) {
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pts[a][2] > pts[b][2]; });
  double volume = 0.0;
  std::vector<std::pair<double, double>> active;
  std::size_t i = 0;
  while (i < order.size()) {
    const double z = pts[order[i]][2];
    while (i < order.size() && pts[order[i]][2] == z) {
      active.emplace_back(pts[order[i]][0], pts[order[i]][1]);
      ++i;
    }
    const double next_z = i < order.size() ? pts[order[i]][2] : ref[2];
    volume += sweep_2d(active, ref[0], ref[1]) * (z - next_z);
  }
  return volume;
}

HypervolumeResult monte_carlo(const std::vector<Objectives>& pts, std::span<const double> ref,
                              const HypervolumeOptions& opts) {
  const std::size_t dims = ref.size();
  Objectives upper(ref.begin(), ref.end());
  for (const auto& p : pts) {
    for (std::size_t k = 0; k < dims; ++k) upper[k] = std::max(upper[k], p[k]);
  }
  double box = 1.0;
  for (std::size_t k = 0; k < dims; ++k) box *= upper[k] - ref[k];

  const std::size_t samples = std::max<std::size_t>(opts.mc_samples, 1);
  std::vector<double> sample_cols(samples * dims);
  Engine eng = make_engine(opts.mc_seed, 0);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t k = 0; k < dims; ++k) {
      sample_cols[k * samples + s] = std::uniform_real_distribution<double>(ref[k], upper[k])(eng);
    }
  }
  std::vector<double> point_cols(pts.size() * dims);
  for (std::size_t p = 0; p < pts.size(); ++p) {
    for (std::size_t k = 0; k < dims; ++k) point_cols[k * pts.size() + p] = pts[p][k];
  }
  const std::size_t hits =
      kernels::active().count_dominated(sample_cols.data(), samples, point_cols.data(), pts.size(), dims);
  const double frac = static_cast<double>(hits) / static_cast<double>(samples);
  HypervolumeResult out;
  out.exact = false;
  out.value = box * frac;
  out.std_error = box * std::sqrt(frac * (1.0 - frac) / static_cast<double>(samples));
  return out;
}

}  // namespace

HypervolumeResult hypervolume(std::span<const Objectives> points, std::span<const double> ref,
                              const HypervolumeOptions& opts) {
  const std::size_t dims = ref.size();
  if (dims == 0) throw Error("hypervolume: empty reference point");
  std::vector<Objectives> kept;
  std::size_t clipped = 0;
  for (const auto& p : points) {
    if (p.size() != dims) throw Error("hypervolume: point dimension differs from the reference point");
    bool ok = true;
    for (std::size_t k = 0; k < dims; ++k) ok = ok && p[k] > ref[k];
    if (ok) {
      kept.push_back(p);
    } else {
      ++clipped;
    }
  }
  if (clipped > 0 && opts.warn_on_clip) {
    warn("hypervolume: " + std::to_string(clipped) + " point(s) do not dominate the reference point and were ignored");
  }

  HypervolumeResult out;
  out.clipped = clipped;
  if (kept.empty()) return out;
  if (dims == 1) {
    double best = kept.front()[0];
    for (const auto& p : kept) best = std::max(best, p[0]);
    out.value = best - ref[0];
    return out;
  }
  if (dims == 2) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(kept.size());
    for (const auto& p : kept) pts.emplace_back(p[0], p[1]);
    out.value = sweep_2d(std::move(pts), ref[0], ref[1]);
    return out;
  }
  if (dims == 3) {
    out.value = slice_3d(kept, ref);
    return out;
  }
  HypervolumeResult mc = monte_carlo(kept, ref, opts);
  mc.clipped = clipped;
  return mc;
}

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    if (!std::isfinite(c)) return INFINITY;
  }
  return std::round(c);
}

namespace {

double subset_volume(std::span<const Objectives> front, std::span<const double> ref,
                     const std::vector<std::size_t>& idx) {
  std::vector<Objectives> pts;
  pts.reserve(idx.size());
  for (std::size_t i : idx) pts.push_back(front[i]);
  return hypervolume_value(pts, ref);
}

SubsetSelection whole_front(std::span<const Objectives> front, std::span<const double> ref) {
  SubsetSelection s;
  s.indices.resize(front.size());
  std::iota(s.indices.begin(), s.indices.end(), std::size_t{0});
  s.hypervolume = subset_volume(front, ref, s.indices);
  s.exhaustive = true;
  return s;
}

}  // namespace

SubsetSelection subset_select_exhaustive(std::span<const Objectives> front, std::span<const double> ref,
                                         std::size_t k) {
  if (front.empty()) throw Error("subset_select: empty front");
  if (k < 1) throw Error("subset_select: k must be >= 1");
  if (k >= front.size()) return whole_front(front, ref);
  std::vector<std::size_t> combo(k);
  std::iota(combo.begin(), combo.end(), std::size_t{0});
  SubsetSelection best;
  best.exhaustive = true;
  best.hypervolume = -1.0;
  const std::size_t n = front.size();
  while (true) {
    const double v = subset_volume(front, ref, combo);
    if (v > best.hypervolume) {
      best.hypervolume = v;
      best.indices = combo;
    }
    // next combination in lexicographic order
    std::size_t i = k;
    while (i > 0 && combo[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) break;
    ++combo[i - 1];
    for (std::size_t j = i; j < k; ++j) combo[j] = combo[j - 1] + 1;
  }
  return best;
}

SubsetSelection subset_select_greedy(std::span<const Objectives> front, std::span<const double> ref, std::size_t k) {
  if (front.empty()) throw Error("subset_select: empty front");
  if (k < 1) throw Error("subset_select: k must be >= 1");
  if (k >= front.size()) return whole_front(front, ref);
  SubsetSelection s;
  std::vector<char> taken(front.size(), 0);
  double current = 0.0;
  for (std::size_t step = 0; step < k; ++step) {
    std::size_t pick = front.size();
    double pick_volume = -1.0;
    for (std::size_t i = 0; i < front.size(); ++i) {
      if (taken[i]) continue;
      auto trial = s.indices;
      trial.push_back(i);
      const double v = subset_volume(front, ref, trial);
      if (v > pick_volume) {
        pick_volume = v;
        pick = i;
      }
    }
    taken[pick] = 1;
    s.indices.push_back(pick);
    current = pick_volume;
  }
  std::sort(s.indices.begin(), s.indices.end());
  s.hypervolume = current;
  return s;
}

SubsetSelection subset_select(std::span<const Objectives> front, std::span<const double> ref, std::size_t k) {
  if (front.empty()) throw Error("subset_select: empty front");
  if (k < 1) throw Error("subset_select: k must be >= 1");
  if (binomial(front.size(), k) <= kExhaustiveSubsetLimit) return subset_select_exhaustive(front, ref, k);
  return subset_select_greedy(front, ref, k);
}

std::vector<double> hypervolume_contributions(std::span<const Objectives> points, std::span<const double> ref) {
  const double total = hypervolume_value(points, ref);
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::vector<Objectives> rest;
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j != i) rest.push_back(points[j]);
    }
    out[i] = total - hypervolume_value(rest, ref);
  }
  return out;
}

}  // namespace pex::mopt
