#pragma once

// Hot complex-arithmetic loops. Each kernel has a scalar reference
// implementation and, on x86-64, an AVX2/FMA variant. The variant is chosen
// once per process from the CPU feature bits; QCP_SIMD=scalar in the
// environment forces the reference path.

#include <cstddef>
#include <span>

#include "qcp/common.hpp"

namespace qcp::kernels {

enum class Isa { kScalar, kAvx2 };

struct KernelTable {
  Isa isa;
  const char* name;
  /// sum_i conj(a[i]) * b[i]
  Complex (*conj_dot)(const Complex* a, const Complex* b, std::size_t n);
  /// sum_i |a[i]|^2
  double (*norm_sq)(const Complex* a, std::size_t n);
  /// y[i] += alpha * x[i]
  void (*axpy)(Complex alpha, const Complex* x, Complex* y, std::size_t n);
};

const KernelTable& scalar_table() noexcept;
/// nullptr when the variant was not compiled in or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table() noexcept;
/// The table used by the wrappers below.
const KernelTable& active() noexcept;

Complex conj_dot(std::span<const Complex> a, std::span<const Complex> b);
double norm_sq(std::span<const Complex> a);
void axpy(Complex alpha, std::span<const Complex> x, std::span<Complex> y);

/// y = A x for a column-major Eigen matrix.
void matvec(const Matrix& a, std::span<const Complex> x, std::span<Complex> y);
/// y = A^dagger x.
void adjoint_matvec(const Matrix& a, std::span<const Complex> x, std::span<Complex> y);

inline std::span<const Complex> view(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<Complex> view(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<const Complex> view(const Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

namespace detail {
const KernelTable* avx2_table_if_compiled() noexcept;
}  // namespace detail

}  // namespace qcp::kernels
