#pragma once

#include <cstddef>
#include <string_view>

// Dense inner-loop kernels with runtime backend selection (scalar reference
// or AVX2). Every reduction uses a fixed 4-way striped accumulation:
//
//   acc[k] = sum of terms with index == k (mod 4), k = 0..3
//   result = (acc[0] + acc[1]) + (acc[2] + acc[3]), then the sequential tail
//
// The AVX2 variants perform the same operations in the same order (no FMA),
// so all backends return bitwise-identical results on identical inputs. The
// library is compiled with -ffp-contract=off to keep the scalar reference
// honest about that contract.

namespace cric::kernels {

enum class Backend { scalar, avx2 };

/// Backend currently used by the dispatched entry points.
Backend active_backend();

bool backend_available(Backend b);

/// Pin the dispatch to one backend (throws ConfigError if unavailable).
/// Intended for equivalence tests; reset_backend() restores auto-detection.
void force_backend(Backend b);
void reset_backend();

std::string_view backend_name(Backend b);

double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sum_sq(const double* a, std::size_t n);
double sq_diff_sum(const double* a, const double* b, std::size_t n);

/// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);
/// x[i] *= alpha
void scal(double alpha, double* x, std::size_t n);

/// out[i] = dot(x.row(i), w) + bias for an n x d row-major matrix.
void matvec_rows(const double* x, std::size_t n, std::size_t d, const double* w,
                 double bias, double* out);

/// out[j] += sum_i r[i] * x[i][j] (transposed accumulation over rows).
void add_weighted_rows(const double* x, std::size_t n, std::size_t d,
                       const double* r, double* out);

/// Scalar reference implementations, always available. The dispatched entry
/// points above must agree with these bitwise; tests compare against them.
namespace scalar_ref {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sum_sq(const double* a, std::size_t n);
double sq_diff_sum(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scal(double alpha, double* x, std::size_t n);
void matvec_rows(const double* x, std::size_t n, std::size_t d, const double* w,
                 double bias, double* out);
void add_weighted_rows(const double* x, std::size_t n, std::size_t d,
                       const double* r, double* out);
}  // namespace scalar_ref

}  // namespace cric::kernels
