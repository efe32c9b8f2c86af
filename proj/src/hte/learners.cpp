#include "pex/hte/learners.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pex/core/diagnostics.hpp"
#include "pex/core/random.hpp"
#include "pex/core/types.hpp"
#include "pex/kernels/kernels.hpp"

namespace pex::hte {

using nlohmann::json;

void BaseLearnerSpec::validate() const {
  if (kind == Kind::ridge) {
    if (!(lambda >= 0.0)) throw Error("ridge penalty must be >= 0");
    return;
  }
  if (tree_count < 1) throw Error("gbt tree_count must be >= 1");
  if (max_depth < 1) throw Error("gbt max_depth must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw Error("gbt learning_rate must lie in (0,1]");
  if (min_samples_leaf < 1) throw Error("gbt min_samples_leaf must be >= 1");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw Error("gbt subsample must lie in (0,1]");
}

json to_json(const BaseLearnerSpec& s) {
  if (s.kind == BaseLearnerSpec::Kind::ridge) return {{"kind", "ridge"}, {"lambda", s.lambda}};
  return {{"kind", "gbt"},
          {"tree_count", s.tree_count},
          {"max_depth", s.max_depth},
          {"learning_rate", s.learning_rate},
          {"min_samples_leaf", s.min_samples_leaf},
          {"subsample", s.subsample}};
}

BaseLearnerSpec learner_spec_from_json(const json& j) {
  BaseLearnerSpec s;
  const auto kind = j.value("kind", std::string("gbt"));
  if (kind == "ridge") {
    s.kind = BaseLearnerSpec::Kind::ridge;
    s.lambda = j.value("lambda", s.lambda);
  } else if (kind == "gbt") {
    s.kind = BaseLearnerSpec::Kind::gbt;
    s.tree_count = j.value("tree_count", s.tree_count);
    s.max_depth = j.value("max_depth", s.max_depth);
    s.learning_rate = j.value("learning_rate", s.learning_rate);
    s.min_samples_leaf = j.value("min_samples_leaf", s.min_samples_leaf);
    s.subsample = j.value("subsample", s.subsample);
  } else {
    throw Error("unknown learner kind '" + kind + "'");
  }
  s.validate();
  return s;
}

double RegressionTree::predict(std::span<const double> x) const {
  int i = 0;
  while (nodes[i].feature >= 0) {
    const TreeNode& nd = nodes[i];
    i = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[i].value;
}

OutcomePredictor OutcomePredictor::constant(double value) {
  OutcomePredictor p;
  p.kind_ = Kind::constant;
  p.intercept_ = value;
  return p;
}

OutcomePredictor OutcomePredictor::ridge(double intercept, std::vector<double> coef) {
  OutcomePredictor p;
  p.kind_ = Kind::ridge;
  p.intercept_ = intercept;
  p.coef_ = std::move(coef);
  return p;
}

OutcomePredictor OutcomePredictor::boosted(double base, double learning_rate, std::vector<RegressionTree> trees) {
  OutcomePredictor p;
  p.kind_ = Kind::gbt;
  p.intercept_ = base;
  p.learning_rate_ = learning_rate;
  p.trees_ = std::move(trees);
  return p;
}

double OutcomePredictor::predict(std::span<const double> x) const {
  switch (kind_) {
    case Kind::constant:
      return intercept_;
    case Kind::ridge: {
      double v = intercept_;
      for (std::size_t k = 0; k < coef_.size(); ++k) v += x[k] * coef_[k];
      return v;
    }
    case Kind::gbt: {
      double v = intercept_;
      for (const auto& t : trees_) v += learning_rate_ * t.predict(x);
      return v;
    }
  }
  return 0.0;
}

void OutcomePredictor::predict_rows(const double* x, std::size_t rows, std::size_t d, double* out) const {
  if (kind_ == Kind::ridge) {
    kernels::active().affine_rows(x, rows, d, coef_.data(), intercept_, out);
    return;
  }
  for (std::size_t r = 0; r < rows; ++r) out[r] = predict(std::span<const double>(x + r * d, d));
}

json OutcomePredictor::to_json() const {
  switch (kind_) {
    case Kind::constant:
      return {{"kind", "constant"}, {"value", intercept_}};
    case Kind::ridge:
      return {{"kind", "ridge"}, {"intercept", intercept_}, {"coef", coef_}};
    case Kind::gbt: {
      json trees = json::array();
      for (const auto& t : trees_) {
        json nodes = json::array();
        for (const auto& nd : t.nodes) {
          nodes.push_back(json::array({nd.feature, nd.threshold, nd.left, nd.right, nd.value}));
        }
        trees.push_back(nodes);
      }
      return {{"kind", "gbt"}, {"base", intercept_}, {"learning_rate", learning_rate_}, {"trees", trees}};
    }
  }
  return {};
}

OutcomePredictor OutcomePredictor::from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") return constant(j.at("value").get<double>());
  if (kind == "ridge") return ridge(j.at("intercept").get<double>(), j.at("coef").get<std::vector<double>>());
  if (kind == "gbt") {
    std::vector<RegressionTree> trees;
    for (const auto& t : j.at("trees")) {
      RegressionTree tree;
      for (const auto& nd : t) {
        tree.nodes.push_back({nd.at(0).get<int>(), nd.at(1).get<double>(), nd.at(2).get<int>(), nd.at(3).get<int>(),
                              nd.at(4).get<double>()});
      }
      const auto count = static_cast<int>(tree.nodes.size());
      for (const auto& nd : tree.nodes) {
        if (nd.feature >= 0 && (nd.left <= 0 || nd.right <= 0 || nd.left >= count || nd.right >= count)) {
          throw Error("gbt tree has a dangling child index");
        }
      }
      if (tree.nodes.empty()) throw Error("gbt tree has no nodes");
      trees.push_back(std::move(tree));
    }
    return boosted(j.at("base").get<double>(), j.at("learning_rate").get<double>(), std::move(trees));
  }
  throw Error("unknown predictor kind '" + kind + "'");
}

namespace {

OutcomePredictor fit_ridge(std::span<const double> x, std::size_t rows, std::size_t d, std::span<const double> y,
                           double lambda) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(rows);
  if (d == 0) return OutcomePredictor::ridge(y_mean, {});

  MatrixXd xc(rows, d);
  VectorXd yc(rows);
  VectorXd x_mean = VectorXd::Zero(d);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < d; ++k) x_mean[k] += x[r * d + k];
  }
  x_mean /= static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < d; ++k) xc(r, k) = x[r * d + k] - x_mean[k];
    yc[r] = y[r] - y_mean;
  }

  VectorXd beta;
  if (lambda == 0.0) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(xc);
    if (qr.rank() < static_cast<Eigen::Index>(d)) {
      throw Error("ridge with lambda = 0 needs a full-rank design (rank " + std::to_string(qr.rank()) + " < " +
                  std::to_string(d) + ")");
    }
    beta = qr.solve(yc);
  } else {
    MatrixXd gram = xc.transpose() * xc;
    gram.diagonal().array() += lambda;
    Eigen::LDLT<MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success) throw Error("ridge normal equations could not be factored");
    beta = ldlt.solve(xc.transpose() * yc);
  }
  std::vector<double> coef(beta.data(), beta.data() + d);
  double intercept = y_mean;
  for (std::size_t k = 0; k < d; ++k) intercept -= x_mean[k] * coef[k];
  return OutcomePredictor::ridge(intercept, std::move(coef));
}

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const double> x, std::size_t d, const std::vector<double>& residual, int max_depth,
              int min_leaf)
      : x_(x), d_(d), residual_(residual), max_depth_(max_depth), min_leaf_(static_cast<std::size_t>(min_leaf)) {}

  RegressionTree build(std::vector<std::size_t> rows) {
    RegressionTree tree;
    grow(tree, std::move(rows), 0);
    return tree;
  }

 private:
  // Exact greedy variance reduction. Candidates are the sorted unique
  // values of each feature; a strictly larger gain is required to replace
  // the incumbent, so ties keep the lowest feature then lowest threshold.
  SplitChoice best_split(const std::vector<std::size_t>& rows) const {
    SplitChoice best;
    const std::size_t count = rows.size();
    if (count < 2 * min_leaf_) return best;
    double total = 0.0;
    for (std::size_t r : rows) total += residual_[r];
    const double parent = total * total / static_cast<double>(count);

    std::vector<std::size_t> order(rows);
    for (std::size_t f = 0; f < d_; ++f) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        double xa = x_[a * d_ + f], xb = x_[b * d_ + f];
        return xa < xb || (xa == xb && a < b);
      });
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < count; ++i) {
        left_sum += residual_[order[i]];
        const double xv = x_[order[i] * d_ + f];
        const double xnext = x_[order[i + 1] * d_ + f];
        if (xv == xnext) continue;
        const std::size_t n_left = i + 1;
        const std::size_t n_right = count - n_left;
        if (n_left < min_leaf_ || n_right < min_leaf_) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                            right_sum * right_sum / static_cast<double>(n_right) - parent;
        if (gain > best.gain) {
          best = {true, static_cast<int>(f), xv, gain};
        }
      }
    }
    return best;
  }

  int grow(RegressionTree& tree, std::vector<std::size_t> rows, int depth) {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    double sum = 0.0;
    for (std::size_t r : rows) sum += residual_[r];
    tree.nodes[index].value = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
    if (depth >= max_depth_) return index;
    SplitChoice split = best_split(rows);
    if (!split.found) return index;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (x_[r * d_ + split.feature] <= split.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    tree.nodes[index].feature = split.feature;
    tree.nodes[index].threshold = split.threshold;
    int l = grow(tree, std::move(left), depth + 1);
    int r = grow(tree, std::move(right), depth + 1);
    tree.nodes[index].left = l;
    tree.nodes[index].right = r;
    return index;
  }

  std::span<const double> x_;
  std::size_t d_;
  const std::vector<double>& residual_;
  int max_depth_;
  std::size_t min_leaf_;
};

OutcomePredictor fit_gbt(std::span<const double> x, std::size_t rows, std::size_t d, std::span<const double> y,
                         const BaseLearnerSpec& spec, std::uint64_t seed) {
  const auto& k = kernels::active();
  const double base = k.sum(y.data(), rows) / static_cast<double>(rows);
  if (rows < static_cast<std::size_t>(spec.min_samples_leaf)) {
    warn("gbt: " + std::to_string(rows) + " rows < min_samples_leaf " + std::to_string(spec.min_samples_leaf) +
         "; using a constant predictor");
    return OutcomePredictor::constant(base);
  }

  std::vector<double> residual(y.begin(), y.end());
  for (double& r : residual) r -= base;
  std::vector<double> losses{k.sum_squares(residual.data(), rows) / static_cast<double>(rows)};
  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(spec.tree_count));
  std::vector<double> step(rows);

  std::vector<std::size_t> all(rows);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto sample_size = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(spec.subsample * static_cast<double>(rows))));

  TreeBuilder builder(x, d, residual, spec.max_depth, spec.min_samples_leaf);
  for (int t = 0; t < spec.tree_count; ++t) {
    std::vector<std::size_t> fit_rows = all;
    if (sample_size < rows) {
      Engine eng = make_engine(seed, static_cast<std::uint64_t>(t));
      std::shuffle(fit_rows.begin(), fit_rows.end(), eng);
      fit_rows.resize(sample_size);
      std::sort(fit_rows.begin(), fit_rows.end());
    }
    RegressionTree tree = builder.build(std::move(fit_rows));
    for (std::size_t r = 0; r < rows; ++r) step[r] = tree.predict(std::span<const double>(x.data() + r * d, d));
    k.axpy(-spec.learning_rate, step.data(), residual.data(), rows);
    losses.push_back(k.sum_squares(residual.data(), rows) / static_cast<double>(rows));
    trees.push_back(std::move(tree));
  }
  OutcomePredictor p = OutcomePredictor::boosted(base, spec.learning_rate, std::move(trees));
  p.set_training_loss(std::move(losses));
  return p;
}

}  // namespace

OutcomePredictor fit_base(std::span<const double> x, std::size_t rows, std::size_t d, std::span<const double> y,
                          const BaseLearnerSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (rows < 1) throw Error("fit_base: need at least one row");
  if (x.size() != rows * d || y.size() != rows) throw Error("fit_base: dimension mismatch");
  if (spec.kind == BaseLearnerSpec::Kind::ridge) return fit_ridge(x, rows, d, y, spec.lambda);
  return fit_gbt(x, rows, d, y, spec, seed);
}

}  // namespace pex::hte
