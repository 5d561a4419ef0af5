#include "cric/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "cric/errors.hpp"

namespace cric::kernels {

namespace scalar_ref {

double dot(const double* a, const double* b, std::size_t n) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t i = 0;
  const std::size_t n4 = n & ~std::size_t{3};
  for (; i < n4; i += 4) {
    acc0 += a[i] * b[i];
    acc1 += a[i + 1] * b[i + 1];
    acc2 += a[i + 2] * b[i + 2];
    acc3 += a[i + 3] * b[i + 3];
  }
  double r = (acc0 + acc1) + (acc2 + acc3);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

double sum(const double* a, std::size_t n) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t i = 0;
  const std::size_t n4 = n & ~std::size_t{3};
  for (; i < n4; i += 4) {
    acc0 += a[i];
    acc1 += a[i + 1];
    acc2 += a[i + 2];
    acc3 += a[i + 3];
  }
  double r = (acc0 + acc1) + (acc2 + acc3);
  for (; i < n; ++i) r += a[i];
  return r;
}

double sum_sq(const double* a, std::size_t n) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t i = 0;
  const std::size_t n4 = n & ~std::size_t{3};
  for (; i < n4; i += 4) {
    acc0 += a[i] * a[i];
    acc1 += a[i + 1] * a[i + 1];
    acc2 += a[i + 2] * a[i + 2];
    acc3 += a[i + 3] * a[i + 3];
  }
  double r = (acc0 + acc1) + (acc2 + acc3);
  for (; i < n; ++i) r += a[i] * a[i];
  return r;
}

double sq_diff_sum(const double* a, const double* b, std::size_t n) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t i = 0;
  const std::size_t n4 = n & ~std::size_t{3};
  for (; i < n4; i += 4) {
    const double d0 = a[i] - b[i];
    const double d1 = a[i + 1] - b[i + 1];
    const double d2 = a[i + 2] - b[i + 2];
    const double d3 = a[i + 3] - b[i + 3];
    acc0 += d0 * d0;
    acc1 += d1 * d1;
    acc2 += d2 * d2;
    acc3 += d3 * d3;
  }
  double r = (acc0 + acc1) + (acc2 + acc3);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    r += d * d;
  }
  return r;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void matvec_rows(const double* x, std::size_t n, std::size_t d, const double* w,
                 double bias, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = dot(x + i * d, w, d) + bias;
}

void add_weighted_rows(const double* x, std::size_t n, std::size_t d,
                       const double* r, double* out) {
  for (std::size_t i = 0; i < n; ++i) axpy(r[i], x + i * d, out, d);
}

}  // namespace scalar_ref

#if defined(CRIC_HAVE_AVX2)
namespace avx2_impl {
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
}  // namespace avx2_impl
#endif

namespace {

struct Table {
  Backend backend;
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*sum_sq)(const double*, std::size_t);
  double (*sq_diff_sum)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scal)(double, double*, std::size_t);
  void (*matvec_rows)(const double*, std::size_t, std::size_t, const double*,
                      double, double*);
  void (*add_weighted_rows)(const double*, std::size_t, std::size_t,
                            const double*, double*);
};

constexpr Table kScalarTable = {
    Backend::scalar,         scalar_ref::dot,
    scalar_ref::sum,         scalar_ref::sum_sq,
    scalar_ref::sq_diff_sum, scalar_ref::axpy,
    scalar_ref::scal,        scalar_ref::matvec_rows,
    scalar_ref::add_weighted_rows,
};

#if defined(CRIC_HAVE_AVX2)
constexpr Table kAvx2Table = {
    Backend::avx2,          avx2_impl::dot,
    avx2_impl::sum,         avx2_impl::sum_sq,
    avx2_impl::sq_diff_sum, avx2_impl::axpy,
    avx2_impl::scal,        avx2_impl::matvec_rows,
    avx2_impl::add_weighted_rows,
};
#endif

bool cpu_has_avx2() {
#if defined(CRIC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

const Table* detect_table() {
  if (const char* env = std::getenv("CRIC_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return &kScalarTable;
#if defined(CRIC_HAVE_AVX2)
    if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return &kAvx2Table;
#endif
  }
#if defined(CRIC_HAVE_AVX2)
  if (cpu_has_avx2()) return &kAvx2Table;
#endif
  return &kScalarTable;
}

std::atomic<const Table*>& table_slot() {
  static std::atomic<const Table*> slot{detect_table()};
  return slot;
}

const Table& table() { return *table_slot().load(std::memory_order_relaxed); }

}  // namespace

Backend active_backend() { return table().backend; }

bool backend_available(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
      return cpu_has_avx2();
  }
  return false;
}

void force_backend(Backend b) {
  if (!backend_available(b)) {
    throw ConfigError("kernel backend not available on this machine");
  }
  if (b == Backend::scalar) {
    table_slot().store(&kScalarTable, std::memory_order_relaxed);
    return;
  }
#if defined(CRIC_HAVE_AVX2)
  table_slot().store(&kAvx2Table, std::memory_order_relaxed);
#endif
}

void reset_backend() { table_slot().store(detect_table(), std::memory_order_relaxed); }

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
  }
  return "unknown";
}

double dot(const double* a, const double* b, std::size_t n) { return table().dot(a, b, n); }
double sum(const double* a, std::size_t n) { return table().sum(a, n); }
double sum_sq(const double* a, std::size_t n) { return table().sum_sq(a, n); }
double sq_diff_sum(const double* a, const double* b, std::size_t n) {
  return table().sq_diff_sum(a, b, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  table().axpy(alpha, x, y, n);
}
void scal(double alpha, double* x, std::size_t n) { table().scal(alpha, x, n); }
void matvec_rows(const double* x, std::size_t n, std::size_t d, const double* w,
                 double bias, double* out) {
  table().matvec_rows(x, n, d, w, bias, out);
}
void add_weighted_rows(const double* x, std::size_t n, std::size_t d,
                       const double* r, double* out) {
  table().add_weighted_rows(x, n, d, r, out);
}

}  // namespace cric::kernels
