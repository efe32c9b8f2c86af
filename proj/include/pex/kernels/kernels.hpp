#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel inner loops shared by the learners, the policy evaluator,
// the off-policy estimators and the Monte Carlo hypervolume.
//
// Every kernel has a scalar reference implementation. Vector variants are
// selected at runtime by CPU feature detection; set PEX_KERNELS=scalar in
// the environment to force the reference path.
//
// Elementwise kernels (affine_rows, axpy, assign_arms, *_terms,
// count_dominated) are bitwise identical across variants: they perform
// the same IEEE operations in the same order, and the build disables FMA
// contraction. Reductions (dot, sum, sum_squares) reassociate and agree
// only to rounding.

namespace pex::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  const char* name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  double (*sum_squares)(const double* a, std::size_t n);

  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // out[r] = intercept + sum_k x[r*d + k] * coef[k], k ascending.
  void (*affine_rows)(const double* x, std::size_t rows, std::size_t d, const double* coef,
                      double intercept, double* out);

  // Linear-utility argmax for a block of records. `tau` is column-major
  // by (arm, outcome): column (a*m + j) holds tau_{a+1,j} for every record,
  // `rows` doubles long. u_a = b_a + sum_j w_j * tau_{a,j} accumulated in
  // j order; the first (lowest) arm wins ties. Writes 1-based arm ids.
  void (*assign_arms)(const double* tau, int n, std::size_t m, const double* w, const double* b,
                      std::size_t rows, std::int32_t* arms);

  // out[r] = (logged[r] == assigned[r]) ? y[r] * inv_p[r] : 0
  void (*ipsw_terms)(const std::int32_t* logged, const std::int32_t* assigned, const double* y,
                     const double* inv_p, std::size_t rows, double* out);

  // out[r] = mu_assigned[r] + ((logged[r] == assigned[r]) ? (y[r] - mu_logged[r]) * inv_p[r] : 0)
  void (*dr_terms)(const std::int32_t* logged, const std::int32_t* assigned, const double* y,
                   const double* inv_p, const double* mu_assigned, const double* mu_logged,
                   std::size_t rows, double* out);

  // Number of samples lying in the union of boxes dominated by `points`
  // (sample s counts iff some point p has p_k >= s_k for every k).
  // Both arrays are column-major: coordinate k of item i at [k*count + i].
  std::size_t (*count_dominated)(const double* samples, std::size_t sample_count, const double* points,
                                 std::size_t point_count, std::size_t dims);
};

const KernelTable& scalar_table();

/// nullptr when the build or the CPU lacks AVX2.
const KernelTable* avx2_table();

/// The table in use for this process.
const KernelTable& active();

}  // namespace pex::kernels
