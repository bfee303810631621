#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

#include "lanpaint/errors.hpp"

namespace lanpaint {

// A point z = (x, y) in sample space. Which coordinates form x and which
// form y is decided by a Mask, not by the State itself.
class State {
 public:
  State() = default;
  explicit State(std::size_t d, double fill = 0.0) : values_(d, fill) {}
  State(std::initializer_list<double> v) : values_(v) {}
  explicit State(std::vector<double> v) : values_(std::move(v)) {}

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  std::span<const double> span() const { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  bool all_finite() const;

  friend bool operator==(const State&, const State&) = default;

 private:
  std::vector<double> values_;
};

// observed[i] == true marks coordinate i as part of the observed region y.
class Mask {
 public:
  Mask() = default;
  explicit Mask(std::vector<bool> observed) : observed_(std::move(observed)) {}
  Mask(std::initializer_list<bool> v) : observed_(v) {}

  static Mask none(std::size_t d) { return Mask(std::vector<bool>(d, false)); }

  std::size_t size() const { return observed_.size(); }
  bool observed(std::size_t i) const { return observed_[i]; }
  bool operator[](std::size_t i) const { return observed_[i]; }
  std::size_t count_observed() const;

  // Throws ConfigError unless the mask has length d and splits the
  // coordinates into two non-empty regions.
  void require_conditional(std::size_t d) const;
  void require_size(std::size_t d) const;

 private:
  std::vector<bool> observed_;
};

// Reproducible source of uniform and normal variates. A (seed, stream) pair
// is expanded through std::seed_seq, so each chain index gets its own
// decorrelated engine state.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed, std::uint64_t stream = 0);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }  // in [0, 1)
  std::uint64_t next_u64() { return engine_(); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Dense row-major matrix, used for small covariance blocks.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  Matrix transposed() const;
  friend Matrix operator*(const Matrix& a, const Matrix& b);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> a_;
};

// Square matrix checked for symmetry (1e-12 absolute) at construction.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Matrix m);
  SymMatrix(std::initializer_list<std::initializer_list<double>> rows)
      : SymMatrix(Matrix(rows)) {}

  static SymMatrix identity(std::size_t n) { return SymMatrix(Matrix::identity(n)); }
  static SymMatrix diagonal(std::span<const double> d);

  std::size_t dim() const { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

// Lower-triangular L with L Lᵀ = m. Pivots in [-1e-10, 0] are treated as 0
// (the corresponding column of L is zeroed); smaller pivots raise NotPSD.
Matrix cholesky(const SymMatrix& m);

// d independent standard normal draws.
State gaussian_vector(RandomSource& rng, std::size_t d);

}  // namespace lanpaint
