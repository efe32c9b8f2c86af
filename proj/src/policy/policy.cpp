#include "pex/policy/policy.hpp"

#include <cmath>
#include <string>

#include "pex/policy/nnls.hpp"

namespace pex::policy {

using nlohmann::json;

namespace {

void check_shape(const PolicyParams& p, const EffectMatrix& tau) {
  if (p.weights.size() != tau.outcomes() || p.biases.size() != static_cast<std::size_t>(tau.arms())) {
    throw Error("policy has " + std::to_string(p.weights.size()) + " weights and " +
                std::to_string(p.biases.size()) + " biases; tau is " + std::to_string(tau.arms()) + "x" +
                std::to_string(tau.outcomes()));
  }
}

}  // namespace

std::vector<double> utility(const PolicyParams& params, const EffectMatrix& tau) {
  check_shape(params, tau);
  std::vector<double> u(params.biases.size());
  for (int i = 1; i <= tau.arms(); ++i) {
    double v = params.biases[i - 1];
    for (std::size_t j = 0; j < tau.outcomes(); ++j) v += params.weights[j] * tau(i, j);
    u[i - 1] = v;
  }
  return u;
}

int decide(const PolicyParams& params, const EffectMatrix& tau) {
  std::vector<double> u = utility(params, tau);
  int best = 1;
  for (std::size_t i = 1; i < u.size(); ++i) {
    if (u[i] > u[best - 1]) best = static_cast<int>(i) + 1;
  }
  return best;
}

PolicyParams canonicalize(const PolicyParams& params, std::span<const Direction> directions) {
  if (params.weights.empty() || params.biases.empty()) throw Error("canonicalize: empty policy");
  if (directions.empty()) throw Error("canonicalize: need the first outcome's direction");
  const double w0 = params.weights[0];
  if (w0 == 0.0 || !std::isfinite(w0)) throw Error("not canonicalizable: first weight is zero");
  if ((w0 > 0.0) != (directions[0] == Direction::maximize)) {
    throw Error("not canonicalizable: first weight's sign contradicts the first outcome's direction");
  }
  const double scale = std::abs(w0);
  PolicyParams out = params;
  for (double& w : out.weights) w /= scale;
  for (double& b : out.biases) b /= scale;
  const double shift = out.biases[0];
  for (double& b : out.biases) b -= shift;
  out.weights[0] = direction_sign(directions[0]);
  return out;
}

bool is_canonical(const PolicyParams& params, Direction first_outcome) {
  return !params.weights.empty() && !params.biases.empty() &&
         params.weights[0] == direction_sign(first_outcome) && params.biases[0] == 0.0;
}

std::vector<double> regularized_utility(const RegularizedParams& reg, const AteMatrix& ate, const EffectMatrix& tau) {
  if (reg.weights.size() != ate.outcomes() || reg.alphas.size() != ate.outcomes() || tau.arms() != ate.arms() ||
      tau.outcomes() != ate.outcomes()) {
    throw Error("regularized_utility: dimension mismatch");
  }
  std::vector<double> u(static_cast<std::size_t>(ate.arms()), 0.0);
  for (int i = 1; i <= ate.arms(); ++i) {
    double v = 0.0;
    for (std::size_t j = 0; j < ate.outcomes(); ++j) {
      v += reg.weights[j] * (reg.alphas[j] * ate(i, j) + (1.0 - reg.alphas[j]) * tau(i, j));
    }
    u[i - 1] = v;
  }
  return u;
}

PolicyParams from_regularized(const RegularizedParams& reg, const AteMatrix& ate) {
  const std::size_t m = ate.outcomes();
  if (reg.weights.size() != m || reg.alphas.size() != m) throw Error("from_regularized: dimension mismatch");
  for (double a : reg.alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw Error("from_regularized: alpha must lie in [0,1]");
  }
  PolicyParams out;
  out.weights.resize(m);
  for (std::size_t j = 0; j < m; ++j) out.weights[j] = reg.weights[j] * (1.0 - reg.alphas[j]);
  out.biases.assign(static_cast<std::size_t>(ate.arms()), 0.0);
  for (int i = 1; i <= ate.arms(); ++i) {
    double b = 0.0;
    for (std::size_t j = 0; j < m; ++j) b += reg.weights[j] * reg.alphas[j] * ate(i, j);
    out.biases[i - 1] = b;
  }
  return out;
}

RepresentabilityResult representable_as_regularized(const PolicyParams& params, const AteMatrix& ate,
                                                    double tolerance) {
  const int n = ate.arms();
  const std::size_t m = ate.outcomes();
  if (params.weights.size() != m || params.biases.size() != static_cast<std::size_t>(n)) {
    throw Error("representable_as_regularized: dimension mismatch");
  }
  if (params.biases[0] != 0.0) throw Error("representable_as_regularized: needs canonical params (b_1 = 0)");

  // Rows 2..n; the control row is zero on both sides.
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < m; ++j) {
    if (params.weights[j] != 0.0) active.push_back(j);
  }
  const auto rows = static_cast<Eigen::Index>(n - 1);
  Eigen::MatrixXd cone(rows, static_cast<Eigen::Index>(active.size()));
  Eigen::VectorXd target(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const int arm = static_cast<int>(r) + 2;
    target[r] = params.biases[arm - 1];
    for (std::size_t k = 0; k < active.size(); ++k) {
      const std::size_t j = active[k];
      cone(r, static_cast<Eigen::Index>(k)) = (params.weights[j] > 0.0 ? 1.0 : -1.0) * ate(arm, j);
    }
  }
  NnlsResult fit = nnls(cone, target);

  RepresentabilityResult out;
  out.residual = fit.residual;
  out.coefficients.assign(m, 0.0);
  for (std::size_t k = 0; k < active.size(); ++k) out.coefficients[active[k]] = fit.x[static_cast<Eigen::Index>(k)];
  const double norm = target.norm();
  const double threshold = norm > 0.0 ? tolerance * norm : tolerance;
  out.representable = fit.residual <= threshold;
  if (out.representable) {
    out.recovered.weights.assign(m, 0.0);
    out.recovered.alphas.assign(m, 0.0);
    for (std::size_t j : active) {
      const double wp = params.weights[j];
      const double x = out.coefficients[j];
      const double alpha = x / (std::abs(wp) + x);
      out.recovered.alphas[j] = alpha;
      out.recovered.weights[j] = wp / (1.0 - alpha);
    }
  }
  return out;
}

std::size_t free_parameter_count(int n, std::size_t m) { return static_cast<std::size_t>(n) + m - 2; }

std::vector<double> free_parameters(const PolicyParams& canonical) {
  std::vector<double> theta(canonical.weights.begin() + 1, canonical.weights.end());
  theta.insert(theta.end(), canonical.biases.begin() + 1, canonical.biases.end());
  return theta;
}

PolicyParams from_free_parameters(std::span<const double> theta, int n, std::size_t m, Direction first_outcome) {
  if (theta.size() != free_parameter_count(n, m)) throw Error("from_free_parameters: wrong parameter count");
  PolicyParams p;
  p.weights.push_back(direction_sign(first_outcome));
  p.weights.insert(p.weights.end(), theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(m - 1));
  p.biases.push_back(0.0);
  p.biases.insert(p.biases.end(), theta.begin() + static_cast<std::ptrdiff_t>(m - 1), theta.end());
  return p;
}

PolicyParams single_arm_policy(int arm, int n, std::size_t m, Direction first_outcome, double margin) {
  if (arm < 1 || arm > n) throw Error("single_arm_policy: arm out of range");
  PolicyParams p;
  p.weights.assign(m, 0.0);
  p.weights[0] = direction_sign(first_outcome);
  p.biases.assign(static_cast<std::size_t>(n), 0.0);
  if (arm == 1) {
    for (int i = 2; i <= n; ++i) p.biases[i - 1] = -margin;
  } else {
    p.biases[arm - 1] = margin;
  }
  return p;
}

json to_json(const PolicyParams& p) { return {{"weights", p.weights}, {"biases", p.biases}}; }

PolicyParams policy_from_json(const json& j) {
  try {
    PolicyParams p;
    p.weights = j.at("weights").get<std::vector<double>>();
    p.biases = j.at("biases").get<std::vector<double>>();
    if (p.weights.empty() || p.biases.empty()) throw Error("policy needs at least one weight and one bias");
    for (double v : p.weights) {
      if (!std::isfinite(v)) throw Error("policy weights must be finite");
    }
    for (double v : p.biases) {
      if (!std::isfinite(v)) throw Error("policy biases must be finite");
    }
    return p;
  } catch (const json::exception& e) {
    throw Error(std::string("policy JSON: ") + e.what());
  }
}

}  // namespace pex::policy
