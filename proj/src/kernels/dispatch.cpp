#include <algorithm>
#include <cstdlib>
#include <string_view>

#include "qcp/kernels/kernels.hpp"

namespace qcp::kernels {

#ifndef QCP_HAVE_AVX2
namespace detail {
const KernelTable* avx2_table_if_compiled() noexcept { return nullptr; }
}  // namespace detail
#endif

namespace {

bool cpu_has_avx2_fma() noexcept {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select() noexcept {
  const char* env = std::getenv("QCP_SIMD");
  if (env != nullptr && std::string_view(env) == "scalar") return scalar_table();
  if (const KernelTable* t = avx2_table()) return *t;
  return scalar_table();
}

}  // namespace

const KernelTable* avx2_table() noexcept {
  static const bool usable = cpu_has_avx2_fma();
  return usable ? detail::avx2_table_if_compiled() : nullptr;
}

const KernelTable& active() noexcept {
  static const KernelTable& table = select();
  return table;
}

Complex conj_dot(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.size() != b.size()) throw DimensionError("conj_dot: length mismatch");
  return active().conj_dot(a.data(), b.data(), a.size());
}

double norm_sq(std::span<const Complex> a) { return active().norm_sq(a.data(), a.size()); }

void axpy(Complex alpha, std::span<const Complex> x, std::span<Complex> y) {
  if (x.size() != y.size()) throw DimensionError("axpy: length mismatch");
  active().axpy(alpha, x.data(), y.data(), x.size());
}

void matvec(const Matrix& a, std::span<const Complex> x, std::span<Complex> y) {
  const auto rows = static_cast<std::size_t>(a.rows());
  if (static_cast<std::size_t>(a.cols()) != x.size() || rows != y.size()) {
    throw DimensionError("matvec: shape mismatch");
  }
  const KernelTable& k = active();
  std::fill(y.begin(), y.end(), Complex{});
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const Complex xj = x[static_cast<std::size_t>(j)];
    if (xj == Complex{}) continue;
    k.axpy(xj, a.data() + j * a.rows(), y.data(), rows);
  }
}

void adjoint_matvec(const Matrix& a, std::span<const Complex> x, std::span<Complex> y) {
  const auto rows = static_cast<std::size_t>(a.rows());
  if (rows != x.size() || static_cast<std::size_t>(a.cols()) != y.size()) {
    throw DimensionError("adjoint_matvec: shape mismatch");
  }
  const KernelTable& k = active();
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    y[static_cast<std::size_t>(j)] = k.conj_dot(a.data() + j * a.rows(), x.data(), rows);
  }
}

}  // namespace qcp::kernels
