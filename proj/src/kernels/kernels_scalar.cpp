#include "pex/kernels/kernels.hpp"

namespace pex::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i];
  return s;
}

double sum_squares_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void affine_rows_scalar(const double* x, std::size_t rows, std::size_t d, const double* coef, double intercept,
                        double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = intercept;
    const double* row = x + r * d;
    for (std::size_t k = 0; k < d; ++k) acc += row[k] * coef[k];
    out[r] = acc;
  }
}

void assign_arms_scalar(const double* tau, int n, std::size_t m, const double* w, const double* b,
                        std::size_t rows, std::int32_t* arms) {
  for (std::size_t r = 0; r < rows; ++r) {
    double best = 0.0;
    std::int32_t best_arm = 1;
    for (int a = 0; a < n; ++a) {
      double u = b[a];
      for (std::size_t j = 0; j < m; ++j) u += w[j] * tau[(static_cast<std::size_t>(a) * m + j) * rows + r];
      if (a == 0 || u > best) {
        best = u;
        best_arm = a + 1;
      }
    }
    arms[r] = best_arm;
  }
}

void ipsw_terms_scalar(const std::int32_t* logged, const std::int32_t* assigned, const double* y,
                       const double* inv_p, std::size_t rows, double* out) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = logged[r] == assigned[r] ? y[r] * inv_p[r] : 0.0;
}

void dr_terms_scalar(const std::int32_t* logged, const std::int32_t* assigned, const double* y,
                     const double* inv_p, const double* mu_assigned, const double* mu_logged, std::size_t rows,
                     double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    double corr = logged[r] == assigned[r] ? (y[r] - mu_logged[r]) * inv_p[r] : 0.0;
    out[r] = mu_assigned[r] + corr;
  }
}

std::size_t count_dominated_scalar(const double* samples, std::size_t sample_count, const double* points,
                                   std::size_t point_count, std::size_t dims) {
  std::size_t hits = 0;
  for (std::size_t s = 0; s < sample_count; ++s) {
    bool covered = false;
    for (std::size_t p = 0; p < point_count && !covered; ++p) {
      bool inside = true;
      for (std::size_t k = 0; k < dims; ++k) {
        if (!(samples[k * sample_count + s] <= points[k * point_count + p])) {
          inside = false;
          break;
        }
      }
      covered = inside;
    }
    hits += covered ? 1 : 0;
  }
  return hits;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      Isa::scalar,        "scalar",         dot_scalar,      sum_scalar,
      sum_squares_scalar, axpy_scalar,      affine_rows_scalar, assign_arms_scalar,
      ipsw_terms_scalar,  dr_terms_scalar,  count_dominated_scalar,
  };
  return table;
}

}  // namespace pex::kernels
