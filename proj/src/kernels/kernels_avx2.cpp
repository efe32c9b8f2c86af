#include <immintrin.h>

#include "pex/kernels/kernels.hpp"

// Compiled with -mavx2; only reached after a runtime CPU check.

namespace pex::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// 4 x int32 equality widened to a 4 x 64-bit lane mask.
inline __m256d eq_mask(const std::int32_t* a, const std::int32_t* b) {
  __m128i va = _mm_loadu_si128(reinterpret_cast<const __m128i*>(a));
  __m128i vb = _mm_loadu_si128(reinterpret_cast<const __m128i*>(b));
  return _mm256_castsi256_pd(_mm256_cvtepi32_epi64(_mm_cmpeq_epi32(va, vb)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_avx2(const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(a + i + 4));
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i];
  return s;
}

double sum_squares_avx2(const double* a, std::size_t n) { return dot_avx2(a, a, n); }

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void affine_rows_avx2(const double* x, std::size_t rows, std::size_t d, const double* coef, double intercept,
                      double* out) {
  const auto stride = static_cast<long long>(d);
  const __m256i offsets = _mm256_set_epi64x(3 * stride, 2 * stride, stride, 0);
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    __m256d acc = _mm256_set1_pd(intercept);
    const double* base = x + r * d;
    for (std::size_t k = 0; k < d; ++k) {
      __m256d xv = _mm256_i64gather_pd(base + k, offsets, 8);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(xv, _mm256_set1_pd(coef[k])));
    }
    _mm256_storeu_pd(out + r, acc);
  }
  for (; r < rows; ++r) {
    double acc = intercept;
    const double* row = x + r * d;
    for (std::size_t k = 0; k < d; ++k) acc += row[k] * coef[k];
    out[r] = acc;
  }
}

void assign_arms_avx2(const double* tau, int n, std::size_t m, const double* w, const double* b,
                      std::size_t rows, std::int32_t* arms) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    __m256d best = _mm256_setzero_pd();
    __m256d best_arm = _mm256_set1_pd(1.0);
    for (int a = 0; a < n; ++a) {
      __m256d u = _mm256_set1_pd(b[a]);
      for (std::size_t j = 0; j < m; ++j) {
        const double* col = tau + (static_cast<std::size_t>(a) * m + j) * rows;
        u = _mm256_add_pd(u, _mm256_mul_pd(_mm256_set1_pd(w[j]), _mm256_loadu_pd(col + r)));
      }
      if (a == 0) {
        best = u;
        continue;
      }
      __m256d gt = _mm256_cmp_pd(u, best, _CMP_GT_OQ);
      best = _mm256_blendv_pd(best, u, gt);
      best_arm = _mm256_blendv_pd(best_arm, _mm256_set1_pd(static_cast<double>(a + 1)), gt);
    }
    _mm_storeu_si128(reinterpret_cast<__m128i*>(arms + r), _mm256_cvttpd_epi32(best_arm));
  }
  for (; r < rows; ++r) {
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

void ipsw_terms_avx2(const std::int32_t* logged, const std::int32_t* assigned, const double* y,
                     const double* inv_p, std::size_t rows, double* out) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    __m256d mask = eq_mask(logged + r, assigned + r);
    __m256d t = _mm256_mul_pd(_mm256_loadu_pd(y + r), _mm256_loadu_pd(inv_p + r));
    _mm256_storeu_pd(out + r, _mm256_and_pd(mask, t));
  }
  for (; r < rows; ++r) out[r] = logged[r] == assigned[r] ? y[r] * inv_p[r] : 0.0;
}

void dr_terms_avx2(const std::int32_t* logged, const std::int32_t* assigned, const double* y,
                   const double* inv_p, const double* mu_assigned, const double* mu_logged, std::size_t rows,
                   double* out) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    __m256d mask = eq_mask(logged + r, assigned + r);
    __m256d corr = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(y + r), _mm256_loadu_pd(mu_logged + r)),
                                 _mm256_loadu_pd(inv_p + r));
    corr = _mm256_and_pd(mask, corr);
    _mm256_storeu_pd(out + r, _mm256_add_pd(_mm256_loadu_pd(mu_assigned + r), corr));
  }
  for (; r < rows; ++r) {
    double corr = logged[r] == assigned[r] ? (y[r] - mu_logged[r]) * inv_p[r] : 0.0;
    out[r] = mu_assigned[r] + corr;
  }
}

std::size_t count_dominated_avx2(const double* samples, std::size_t sample_count, const double* points,
                                 std::size_t point_count, std::size_t dims) {
  std::size_t hits = 0;
  std::size_t s = 0;
  const __m256d all = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));
  for (; s + 4 <= sample_count; s += 4) {
    __m256d covered = _mm256_setzero_pd();
    for (std::size_t p = 0; p < point_count; ++p) {
      __m256d inside = all;
      for (std::size_t k = 0; k < dims; ++k) {
        __m256d sv = _mm256_loadu_pd(samples + k * sample_count + s);
        __m256d pv = _mm256_set1_pd(points[k * point_count + p]);
        inside = _mm256_and_pd(inside, _mm256_cmp_pd(sv, pv, _CMP_LE_OQ));
      }
      covered = _mm256_or_pd(covered, inside);
      if (_mm256_movemask_pd(covered) == 0xF) break;
    }
    hits += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(_mm256_movemask_pd(covered))));
  }
  for (; s < sample_count; ++s) {
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

const KernelTable& avx2_table_impl() {
  static const KernelTable table{
      Isa::avx2,        "avx2",         dot_avx2,         sum_avx2,
      sum_squares_avx2, axpy_avx2,      affine_rows_avx2, assign_arms_avx2,
      ipsw_terms_avx2,  dr_terms_avx2,  count_dominated_avx2,
  };
  return table;
}

}  // namespace pex::kernels
