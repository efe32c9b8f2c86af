#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace pex::mopt {

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;  // latent function variance
};

/// Zero-mean GP on standardized targets with an isotropic squared-
/// exponential kernel. Hyperparameters (length scale, signal variance,
/// nugget) are picked by maximum marginal likelihood over a fixed
/// log-spaced grid. Per-point noise variances are added to the diagonal.
class GaussianProcess {
 public:
  /// nullopt when no grid point yields a positive-definite kernel matrix.
  static std::optional<GaussianProcess> fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                                            const std::vector<double>& noise_var);

  Prediction predict(std::span<const double> x) const;

  double length_scale() const { return length_scale_; }
  double signal_var() const { return signal_var_; }
  double nugget() const { return nugget_; }
  double log_marginal_likelihood() const { return lml_; }

 private:
  std::vector<std::vector<double>> x_;
  Eigen::VectorXd alpha_;
  Eigen::MatrixXd chol_l_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  double length_scale_ = 1.0;
  double signal_var_ = 1.0;
  double nugget_ = 1e-6;
  double lml_ = 0.0;
};

/// Inverse-distance weighted k-nearest-neighbour regressor; its variance
/// is the weighted spread of the neighbours.
class KnnRegressor {
 public:
  KnnRegressor(std::vector<std::vector<double>> x, std::vector<double> y, std::size_t k = 5);
  Prediction predict(std::span<const double> x) const;

 private:
  std::vector<std::vector<double>> x_;
  std::vector<double> y_;
  std::size_t k_;
  double floor_var_;
};

/// GP when it fits, otherwise the kNN fallback.
class Surrogate {
 public:
  static Surrogate fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                       const std::vector<double>& noise_var);

  Prediction predict(std::span<const double> x) const;
  bool uses_gp() const { return gp_.has_value(); }

 private:
  std::optional<GaussianProcess> gp_;
  std::shared_ptr<KnnRegressor> knn_;
};

}  // namespace pex::mopt
