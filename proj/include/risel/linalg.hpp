#pragma once

// Small dense complex linear algebra: just enough for the beamforming and
// phase-shift solvers. Everything here is deterministic and allocation-light;
// matrices are at most a few hundred on a side.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "risel/errors.hpp"

namespace risel {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;
using rvec = std::vector<double>;

namespace detail {

template <class T>
struct is_complex : std::false_type {};
template <class T>
struct is_complex<std::complex<T>> : std::true_type {};

template <class T>
inline T conj_if(const T& x) {
  if constexpr (is_complex<T>::value) {
    return std::conj(x);
  } else {
    return x;
  }
}

template <class T>
inline double abs2(const T& x) {
  if constexpr (is_complex<T>::value) {
    return std::norm(x);
  } else {
    return x * x;
  }
}

}  // namespace detail

/// Dense row-major matrix.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<T> column(std::size_t c) const {
    std::vector<T> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  const std::vector<T>& data() const noexcept { return data_; }
  std::vector<T>& data() noexcept { return data_; }

  Matrix adjoint() const {
    Matrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) out(c, r) = detail::conj_if((*this)(r, c));
    return out;
  }

  Matrix operator*(const Matrix& rhs) const {
    if (cols_ != rhs.rows_) throw contract_error("matrix product: inner dimensions differ");
    Matrix out(rows_, rhs.cols_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t k = 0; k < cols_; ++k) {
        const T a = (*this)(r, k);
        if (a == T{}) continue;
        for (std::size_t c = 0; c < rhs.cols_; ++c) out(r, c) += a * rhs(k, c);
      }
    return out;
  }

  Matrix operator-(const Matrix& rhs) const {
    if (rows_ != rhs.rows_ || cols_ != rhs.cols_) throw contract_error("matrix difference: shape mismatch");
    Matrix out = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] -= rhs.data_[i];
    return out;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& x : data_) m = std::max(m, std::abs(x));
    return m;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using cmat = Matrix<cplx>;
using rmat = Matrix<double>;

// ---------------------------------------------------------------------------
// Vector helpers

/// x^H y
template <class T>
inline T inner(std::span<const T> x, std::span<const T> y) {
  if (x.size() != y.size()) throw contract_error("inner product: length mismatch");
  T acc{};
  for (std::size_t i = 0; i < x.size(); ++i) acc += detail::conj_if(x[i]) * y[i];
  return acc;
}

template <class T>
inline T inner(const std::vector<T>& x, const std::vector<T>& y) {
  return inner(std::span<const T>(x), std::span<const T>(y));
}

template <class T>
inline double norm2(std::span<const T> x) {
  double acc = 0.0;
  for (const auto& v : x) acc += detail::abs2(v);
  return std::sqrt(acc);
}

template <class T>
inline double norm2(const std::vector<T>& x) {
  return norm2(std::span<const T>(x));
}

template <class T>
inline std::vector<T> matvec(const Matrix<T>& a, std::span<const T> x) {
  if (a.cols() != x.size()) throw contract_error("matvec: dimension mismatch");
  std::vector<T> y(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    T acc{};
    const auto row = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
  return y;
}

template <class T>
inline std::vector<T> matvec(const Matrix<T>& a, const std::vector<T>& x) {
  return matvec(a, std::span<const T>(x));
}

/// A^H x without forming A^H.
template <class T>
inline std::vector<T> adjoint_matvec(const Matrix<T>& a, std::span<const T> x) {
  if (a.rows() != x.size()) throw contract_error("adjoint_matvec: dimension mismatch");
  std::vector<T> y(a.cols(), T{});
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto row = a.row(r);
    const T xr = x[r];
    for (std::size_t c = 0; c < a.cols(); ++c) y[c] += detail::conj_if(row[c]) * xr;
  }
  return y;
}

template <class T>
inline std::vector<T> adjoint_matvec(const Matrix<T>& a, const std::vector<T>& x) {
  return adjoint_matvec(a, std::span<const T>(x));
}

template <class T>
inline bool all_finite(std::span<const T> x) {
  return std::all_of(x.begin(), x.end(), [](const T& v) {
    if constexpr (detail::is_complex<T>::value) {
      return std::isfinite(v.real()) && std::isfinite(v.imag());
    } else {
      return std::isfinite(v);
    }
  });
}

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition

inline constexpr double kHermitianTolerance = 1e-10;

inline double hermitian_defect(const cmat& a) {
  if (!a.square()) return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = r; c < a.cols(); ++c) d = std::max(d, std::abs(a(r, c) - std::conj(a(c, r))));
  return d;
}

inline bool is_hermitian(const cmat& a, double tol = kHermitianTolerance) {
  return a.square() && hermitian_defect(a) < tol;
}

struct EigDecomposition {
  rvec values;   // ascending
  cmat vectors;  // column j pairs with values[j]

  /// Q diag(values) Q^H
  cmat reconstruct() const {
    const std::size_t n = vectors.rows();
    const std::size_t r = vectors.cols();
    cmat out(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        cplx acc{};
        for (std::size_t k = 0; k < r; ++k) acc += vectors(i, k) * values[k] * std::conj(vectors(j, k));
        out(i, j) = acc;
      }
    return out;
  }
};

namespace detail {

inline void sort_eigenpairs(EigDecomposition& e) {
  const std::size_t n = e.values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return e.values[a] < e.values[b]; });
  EigDecomposition sorted{rvec(n), cmat(e.vectors.rows(), n)};
  for (std::size_t j = 0; j < n; ++j) {
    sorted.values[j] = e.values[order[j]];
    for (std::size_t i = 0; i < e.vectors.rows(); ++i) sorted.vectors(i, j) = e.vectors(i, order[j]);
  }
  e = std::move(sorted);
}

}  // namespace detail

/// Cyclic complex Jacobi. Each rotation first removes the phase of the pivot
/// a_pq with a diagonal unitary, then applies the classical real rotation.
inline EigDecomposition hermitian_eig(const cmat& input) {
  if (!input.square()) throw contract_error("hermitian_eig: matrix is not square");
  if (input.rows() == 0) throw contract_error("hermitian_eig: empty matrix");
  if (!is_hermitian(input)) throw contract_error("hermitian_eig: matrix is not Hermitian within 1e-10");

  const std::size_t n = input.rows();
  cmat a(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) a(r, c) = 0.5 * (input(r, c) + std::conj(input(c, r)));
  for (std::size_t i = 0; i < n; ++i) a(i, i) = a(i, i).real();

  cmat v = cmat::identity(n);

  const double scale = std::max(a.max_abs(), std::numeric_limits<double>::min());
  const double target = std::numeric_limits<double>::epsilon() * scale * static_cast<double>(n);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = r + 1; c < n; ++c) s += std::norm(a(r, c));
    return std::sqrt(2.0 * s);
  };

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_norm() <= target) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag <= 1e-300 || mag < 1e-3 * target / static_cast<double>(n)) continue;

        const cplx phase = apq / mag;  // e^{i phi}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double vartheta = (aqq - app) / (2.0 * mag);
        const double t = (vartheta >= 0.0 ? 1.0 : -1.0) / (std::abs(vartheta) + std::hypot(vartheta, 1.0));
        const double c = 1.0 / std::hypot(t, 1.0);
        const double s = t * c;

        // J = diag(1, e^{-i phi}) * [[c, s], [-s, c]] on columns p, q.
        const cplx jpp = c;
        const cplx jpq = s;
        const cplx jqp = -s * std::conj(phase);
        const cplx jqq = c * std::conj(phase);

        for (std::size_t r = 0; r < n; ++r) {
          const cplx arp = a(r, p);
          const cplx arq = a(r, q);
          a(r, p) = arp * jpp + arq * jqp;
          a(r, q) = arp * jpq + arq * jqq;
        }
        for (std::size_t col = 0; col < n; ++col) {
          const cplx apc = a(p, col);
          const cplx aqc = a(q, col);
          a(p, col) = std::conj(jpp) * apc + std::conj(jqp) * aqc;
          a(q, col) = std::conj(jpq) * apc + std::conj(jqq) * aqc;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();

        for (std::size_t r = 0; r < n; ++r) {
          const cplx vrp = v(r, p);
          const cplx vrq = v(r, q);
          v(r, p) = vrp * jpp + vrq * jqp;
          v(r, q) = vrp * jpq + vrq * jqq;
        }
      }
    }
  }

  EigDecomposition out{rvec(n), std::move(v)};
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i).real();
  detail::sort_eigenpairs(out);
  return out;
}

/// Eigendecomposition of A = U diag(weights) U^H restricted to range(U).
/// Returns only the (numerically) nonzero spectrum; the remaining eigenvalues
/// are exactly zero on the orthogonal complement of range(U). Costs O(M r^2)
/// instead of O(M^3), which is what makes large RIS sizes tractable.
inline EigDecomposition compact_hermitian_eig(const cmat& factors, std::span<const double> weights) {
  const std::size_t m = factors.rows();
  const std::size_t r = factors.cols();
  if (weights.size() != r) throw contract_error("compact_hermitian_eig: weight count mismatch");

  // Modified Gram-Schmidt with rank detection: factors = basis * coeff.
  double col_scale = 0.0;
  for (std::size_t j = 0; j < r; ++j) col_scale = std::max(col_scale, norm2(factors.column(j)));
  const double drop = 1e-13 * std::max(col_scale, std::numeric_limits<double>::min());

  std::vector<cvec> basis;
  cmat coeff(r, r);  // row = basis index, col = factor index
  for (std::size_t j = 0; j < r; ++j) {
    cvec v = factors.column(j);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t b = 0; b < basis.size(); ++b) {
        const cplx proj = inner(basis[b], v);
        coeff(b, j) += proj;
        for (std::size_t i = 0; i < m; ++i) v[i] -= proj * basis[b][i];
      }
    }
    const double nv = norm2(v);
    if (nv > drop && basis.size() < m) {
      for (auto& x : v) x /= nv;
      coeff(basis.size(), j) = nv;
      basis.push_back(std::move(v));
    }
  }

  const std::size_t k = basis.size();
  if (k == 0) return EigDecomposition{rvec{}, cmat(m, 0)};

  // Reduced matrix S = C diag(w) C^H on the basis.
  cmat reduced(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      cplx acc{};
      for (std::size_t l = 0; l < r; ++l) acc += coeff(i, l) * weights[l] * std::conj(coeff(j, l));
      reduced(i, j) = acc;
    }
  for (std::size_t i = 0; i < k; ++i) {
    reduced(i, i) = reduced(i, i).real();
    for (std::size_t j = i + 1; j < k; ++j) {
      const cplx avg = 0.5 * (reduced(i, j) + std::conj(reduced(j, i)));
      reduced(i, j) = avg;
      reduced(j, i) = std::conj(avg);
    }
  }
  const EigDecomposition small = hermitian_eig(reduced);

  EigDecomposition out{small.values, cmat(m, k)};
  for (std::size_t col = 0; col < k; ++col)
    for (std::size_t b = 0; b < k; ++b) {
      const cplx w = small.vectors(b, col);
      for (std::size_t i = 0; i < m; ++i) out.vectors(i, col) += basis[b][i] * w;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Linear systems

inline constexpr double kMaxCondition = 1e12;

namespace detail {

template <class T>
struct LuFactors {
  Matrix<T> lu;
  std::vector<std::size_t> perm;
};

template <class T>
LuFactors<T> lu_factor(const Matrix<T>& a) {
  const std::size_t n = a.rows();
  LuFactors<T> f{a, std::vector<std::size_t>(n)};
  std::iota(f.perm.begin(), f.perm.end(), std::size_t{0});
  auto& lu = f.lu;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(lu(k, k));
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(lu(r, k)) > best) {
        best = std::abs(lu(r, k));
        piv = r;
      }
    if (best == 0.0) throw numerical_error("solve_linear: matrix is singular", std::numeric_limits<double>::infinity());
    if (piv != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(lu(k, c), lu(piv, c));
      std::swap(f.perm[k], f.perm[piv]);
    }
    const T inv = T{1} / lu(k, k);
    for (std::size_t r = k + 1; r < n; ++r) {
      const T l = lu(r, k) * inv;
      lu(r, k) = l;
      if (l == T{}) continue;
      for (std::size_t c = k + 1; c < n; ++c) lu(r, c) -= l * lu(k, c);
    }
  }
  return f;
}

template <class T>
std::vector<T> lu_solve(const LuFactors<T>& f, std::span<const T> b) {
  const std::size_t n = f.lu.rows();
  std::vector<T> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[f.perm[i]];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) x[i] -= f.lu(i, j) * x[j];
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t j = ii + 1; j < n; ++j) x[ii] -= f.lu(ii, j) * x[j];
    x[ii] /= f.lu(ii, ii);
  }
  return x;
}

template <class T>
double one_norm(const Matrix<T>& a) {
  double best = 0.0;
  for (std::size_t c = 0; c < a.cols(); ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) s += std::abs(a(r, c));
    best = std::max(best, s);
  }
  return best;
}

}  // namespace detail

/// 1-norm condition number, computed exactly from the LU factors (n is small).
template <class T>
double condition_estimate(const Matrix<T>& a) {
  if (!a.square()) throw contract_error("condition_estimate: matrix is not square");
  const auto f = detail::lu_factor(a);
  const std::size_t n = a.rows();
  Matrix<T> inv(n, n);
  std::vector<T> e(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::fill(e.begin(), e.end(), T{});
    e[c] = T{1};
    const auto col = detail::lu_solve(f, std::span<const T>(e));
    for (std::size_t r = 0; r < n; ++r) inv(r, c) = col[r];
  }
  return detail::one_norm(a) * detail::one_norm(inv);
}

/// Solves A x = b by partially pivoted LU with one step of iterative refinement.
template <class T>
std::vector<T> solve_linear(const Matrix<T>& a, std::span<const T> b) {
  if (!a.square()) throw contract_error("solve_linear: matrix is not square");
  if (a.rows() != b.size()) throw contract_error("solve_linear: right-hand side length mismatch");
  if (a.rows() == 0) throw contract_error("solve_linear: empty system");

  const double cond = condition_estimate(a);
  if (!(cond < kMaxCondition))
    throw numerical_error("solve_linear: ill-conditioned system (cond ~ " + std::to_string(cond) + ")", cond);

  const auto f = detail::lu_factor(a);
  std::vector<T> x = detail::lu_solve(f, b);

  std::vector<T> resid = matvec(a, x);
  for (std::size_t i = 0; i < resid.size(); ++i) resid[i] = b[i] - resid[i];
  const auto dx = detail::lu_solve(f, std::span<const T>(resid));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += dx[i];
  return x;
}

template <class T>
std::vector<T> solve_linear(const Matrix<T>& a, const std::vector<T>& b) {
  return solve_linear(a, std::span<const T>(b));
}

}  // namespace risel
