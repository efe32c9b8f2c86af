#pragma once

#include <Eigen/Dense>

namespace pex::policy {

struct NnlsResult {
  Eigen::VectorXd x;
  double residual = 0.0;  // ||A x - b||_2
  int iterations = 0;
};

/// min ||A x - b|| subject to x >= 0, by the Lawson-Hanson active-set method.
NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iterations = 0);

}  // namespace pex::policy
