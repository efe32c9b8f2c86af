#include "pex/policy/nnls.hpp"

#include <vector>

#include "pex/core/types.hpp"

namespace pex::policy {

namespace {

Eigen::VectorXd solve_passive(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const std::vector<bool>& passive) {
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    if (passive[j]) cols.push_back(j);
  }
  Eigen::VectorXd z = Eigen::VectorXd::Zero(a.cols());
  if (cols.empty()) return z;
  Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = a.col(cols[k]);
  Eigen::VectorXd zs = sub.colPivHouseholderQr().solve(b);
  for (std::size_t k = 0; k < cols.size(); ++k) z[cols[k]] = zs[static_cast<Eigen::Index>(k)];
  return z;
}

}  // namespace

NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iterations) {
  if (a.rows() != b.size()) throw Error("nnls: row count mismatch");
  const Eigen::Index cols = a.cols();
  if (max_iterations <= 0) max_iterations = 3 * static_cast<int>(cols) + 10;
  NnlsResult out;
  out.x = Eigen::VectorXd::Zero(cols);
  if (cols == 0) {
    out.residual = b.norm();
    return out;
  }
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() * a.cwiseAbs().maxCoeff() *
                     static_cast<double>(std::max(a.rows(), cols));
  std::vector<bool> passive(static_cast<std::size_t>(cols), false);
  Eigen::VectorXd& x = out.x;
  Eigen::VectorXd w = a.transpose() * (b - a * x);

  while (out.iterations < max_iterations) {
    Eigen::Index t = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!passive[j] && w[j] > best) {
        best = w[j];
        t = j;
      }
    }
    if (t < 0) break;
    passive[t] = true;
    ++out.iterations;

    while (true) {
      Eigen::VectorXd z = solve_passive(a, b, passive);
      bool feasible = true;
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (passive[j] && z[j] <= 0.0) feasible = false;
      }
      if (feasible) {
        x = z;
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (passive[j] && z[j] <= 0.0) {
          double denom = x[j] - z[j];
          if (denom > 0.0) alpha = std::min(alpha, x[j] / denom);
        }
      }
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (passive[j] && x[j] <= tol) {
          passive[j] = false;
          x[j] = 0.0;
        }
      }
    }
    w = a.transpose() * (b - a * x);
  }
  out.residual = (a * x - b).norm();
  return out;
}

}  // namespace pex::policy
