#include "lanpaint/state.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lanpaint {

bool State::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::size_t Mask::count_observed() const {
  return static_cast<std::size_t>(std::count(observed_.begin(), observed_.end(), true));
}

void Mask::require_size(std::size_t d) const {
  if (observed_.size() != d) {
    throw ConfigError("mask length " + std::to_string(observed_.size()) +
                      " does not match state dimension " + std::to_string(d));
  }
}

void Mask::require_conditional(std::size_t d) const {
  require_size(d);
  const std::size_t k = count_observed();
  if (k == 0 || k == d) {
    throw ConfigError("mask must contain both observed and inpainted coordinates");
  }
}

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x4c50u};
  engine_.seed(seq);
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  a_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw InvalidRange("ragged matrix initializer");
    a_.insert(a_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InvalidRange("matrix product shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw InvalidRange("symmetric matrix must be square");
  for (std::size_t i = 0; i < m_.rows(); ++i)
    for (std::size_t j = i + 1; j < m_.cols(); ++j) {
      if (std::abs(m_(i, j) - m_(j, i)) > 1e-12) {
        throw InvalidRange("matrix is not symmetric");
      }
      m_(j, i) = m_(i, j);
    }
}

SymMatrix SymMatrix::diagonal(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return SymMatrix(std::move(m));
}

Matrix cholesky(const SymMatrix& m) {
  constexpr double kClamp = 1e-10;
  const std::size_t n = m.dim();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = m(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (pivot < -kClamp) {
      throw NotPSD("cholesky: pivot " + std::to_string(pivot) + " at index " +
                   std::to_string(j));
    }
    if (pivot <= 0.0) continue;  // clamped: column j stays zero
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = m(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / ljj;
    }
  }
  return l;
}

State gaussian_vector(RandomSource& rng, std::size_t d) {
  if (d == 0) throw InvalidRange("gaussian_vector: d must be at least 1");
  State z(d);
  for (std::size_t i = 0; i < d; ++i) z[i] = rng.normal();
  return z;
}

}  // namespace lanpaint
