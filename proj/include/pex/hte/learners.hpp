#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

namespace pex::hte {

struct BaseLearnerSpec {
  enum class Kind { ridge, gbt };
  Kind kind = Kind::gbt;

  // ridge: penalty on slopes only; the intercept is never penalized.
  double lambda = 1.0;

  // gbt: least-squares boosting over depth-limited regression trees.
  int tree_count = 50;
  int max_depth = 3;
  double learning_rate = 0.1;
  int min_samples_leaf = 20;
  double subsample = 1.0;  // row fraction per tree; < 1 draws rows from the seed

  void validate() const;
};

nlohmann::json to_json(const BaseLearnerSpec& s);
BaseLearnerSpec learner_spec_from_json(const nlohmann::json& j);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
};

/// A fitted regression mu(x). Immutable once fitted.
class OutcomePredictor {
 public:
  enum class Kind { constant, ridge, gbt };

  static OutcomePredictor constant(double value);
  static OutcomePredictor ridge(double intercept, std::vector<double> coef);
  static OutcomePredictor boosted(double base, double learning_rate, std::vector<RegressionTree> trees);

  Kind kind() const { return kind_; }
  double predict(std::span<const double> x) const;

  /// Predicts every row of a row-major rows x d matrix.
  void predict_rows(const double* x, std::size_t rows, std::size_t d, double* out) const;

  double intercept() const { return intercept_; }
  const std::vector<double>& coefficients() const { return coef_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  double learning_rate() const { return learning_rate_; }

  /// Mean squared training residual after the base value and after each
  /// tree (gbt only; empty otherwise). Not serialized.
  const std::vector<double>& training_loss() const { return training_loss_; }
  void set_training_loss(std::vector<double> l) { training_loss_ = std::move(l); }

  nlohmann::json to_json() const;
  static OutcomePredictor from_json(const nlohmann::json& j);

 private:
  Kind kind_ = Kind::constant;
  double intercept_ = 0.0;  // constant value, ridge intercept, or gbt base score
  std::vector<double> coef_;
  double learning_rate_ = 1.0;
  std::vector<RegressionTree> trees_;
  std::vector<double> training_loss_;
};

/// Fits mu on row-major `x` (rows x d) against `y`.
OutcomePredictor fit_base(std::span<const double> x, std::size_t rows, std::size_t d, std::span<const double> y,
                          const BaseLearnerSpec& spec, std::uint64_t seed);

}  // namespace pex::hte
