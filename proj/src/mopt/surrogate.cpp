#include "pex/mopt/surrogate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "pex/core/types.hpp"

namespace pex::mopt {

namespace {

constexpr std::array<double, 9> kLengthScales{0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 3.0};
constexpr std::array<double, 3> kSignalVars{0.25, 1.0, 4.0};
constexpr std::array<double, 5> kNuggets{1e-6, 1e-4, 1e-3, 1e-2, 1e-1};

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return s;
}

}  // namespace

std::optional<GaussianProcess> GaussianProcess::fit(const std::vector<std::vector<double>>& x,
                                                    const std::vector<double>& y,
                                                    const std::vector<double>& noise_var) {
  const std::size_t n = x.size();
  if (n == 0 || y.size() != n || noise_var.size() != n) return std::nullopt;
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
  const double scale = var > 0.0 ? std::sqrt(var) : 1.0;

  Eigen::VectorXd ys(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) ys[static_cast<Eigen::Index>(i)] = (y[i] - mean) / scale;
  Eigen::MatrixXd d2(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      d2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sq_dist(x[i], x[j]);
    }
  }

  std::optional<GaussianProcess> best;
  for (double ls : kLengthScales) {
    Eigen::MatrixXd base = (-d2.array() / (2.0 * ls * ls)).exp().matrix();
    for (double sf : kSignalVars) {
      for (double nug : kNuggets) {
        Eigen::MatrixXd k = sf * base;
        for (std::size_t i = 0; i < n; ++i) {
          k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += nug + noise_var[i] / (scale * scale);
        }
        Eigen::LLT<Eigen::MatrixXd> llt(k);
        if (llt.info() != Eigen::Success) continue;
        Eigen::VectorXd alpha = llt.solve(ys);
        const Eigen::MatrixXd l = llt.matrixL();
        const double logdet = 2.0 * l.diagonal().array().log().sum();
        const double lml = -0.5 * ys.dot(alpha) - 0.5 * logdet - 0.5 * static_cast<double>(n) * std::log(2 * M_PI);
        if (!std::isfinite(lml)) continue;
        if (!best || lml > best->lml_) {
          GaussianProcess gp;
          gp.x_ = x;
          gp.alpha_ = std::move(alpha);
          gp.chol_l_ = l;
          gp.y_mean_ = mean;
          gp.y_scale_ = scale;
          gp.length_scale_ = ls;
          gp.signal_var_ = sf;
          gp.nugget_ = nug;
          gp.lml_ = lml;
          best = std::move(gp);
        }
      }
    }
  }
  return best;
}

Prediction GaussianProcess::predict(std::span<const double> x) const {
  const auto n = static_cast<Eigen::Index>(x_.size());
  Eigen::VectorXd kstar(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    kstar[i] = signal_var_ * std::exp(-sq_dist(x, x_[static_cast<std::size_t>(i)]) / (2.0 * length_scale_ * length_scale_));
  }
  const double mean_std = kstar.dot(alpha_);
  Eigen::VectorXd v = chol_l_.triangularView<Eigen::Lower>().solve(kstar);
  const double var_std = std::max(signal_var_ - v.squaredNorm(), 1e-12);
  return {y_mean_ + y_scale_ * mean_std, var_std * y_scale_ * y_scale_};
}

KnnRegressor::KnnRegressor(std::vector<std::vector<double>> x, std::vector<double> y, std::size_t k)
    : x_(std::move(x)), y_(std::move(y)), k_(std::max<std::size_t>(1, k)) {
  if (x_.empty() || x_.size() != y_.size()) throw Error("KnnRegressor needs matching, nonempty data");
  double lo = *std::min_element(y_.begin(), y_.end());
  double hi = *std::max_element(y_.begin(), y_.end());
  floor_var_ = std::max(1e-12, 1e-4 * (hi - lo) * (hi - lo));
}

Prediction KnnRegressor::predict(std::span<const double> x) const {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(x_.size());
  for (std::size_t i = 0; i < x_.size(); ++i) dist.emplace_back(std::sqrt(sq_dist(x, x_[i])), i);
  const std::size_t k = std::min(k_, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  double wsum = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double w = 1.0 / (dist[i].first + 1e-9);
    wsum += w;
    mean += w * y_[dist[i].second];
  }
  mean /= wsum;
  double var = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double w = 1.0 / (dist[i].first + 1e-9);
    const double t = y_[dist[i].second] - mean;
    var += w * t * t;
  }
  var /= wsum;
  return {mean, std::max(var, floor_var_)};
}

Surrogate Surrogate::fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                         const std::vector<double>& noise_var) {
  Surrogate s;
  s.gp_ = GaussianProcess::fit(x, y, noise_var);
  if (!s.gp_) s.knn_ = std::make_shared<KnnRegressor>(x, y);
  return s;
}

Prediction Surrogate::predict(std::span<const double> x) const {
  return gp_ ? gp_->predict(x) : knn_->predict(x);
}

}  // namespace pex::mopt
