#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

// Deterministic dense linear algebra and elementwise kernels.
// Everything is plain double (64-bit); all randomness flows through Prng.

namespace hred {

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim, double value = 0.0) : d_(dim, value) {}
  Vector(std::initializer_list<double> init) : d_(init) {}

  std::size_t dim() const { return d_.size(); }
  double& operator[](std::size_t i) { return d_[i]; }
  double operator[](std::size_t i) const { return d_[i]; }
  double* data() { return d_.data(); }
  const double* data() const { return d_.data(); }
  auto begin() { return d_.begin(); }
  auto end() { return d_.end(); }
  auto begin() const { return d_.begin(); }
  auto end() const { return d_.end(); }
  void fill(double value) { d_.assign(d_.size(), value); }
  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> d_;
};

// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), d_(rows * cols, value) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return d_.size(); }
  double& operator()(std::size_t i, std::size_t j) { return d_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return d_[i * cols_ + j]; }
  double* row(std::size_t i) { return d_.data() + i * cols_; }
  const double* row(std::size_t i) const { return d_.data() + i * cols_; }
  double* data() { return d_.data(); }
  const double* data() const { return d_.data(); }
  void fill(double value) { d_.assign(d_.size(), value); }
  bool operator==(const Matrix&) const = default;

  static Matrix identity(std::size_t n);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> d_;
};

// Seedable generator with a fixed algorithm: the 64-bit Mersenne Twister
// (mt19937_64, state transition fixed by the C++ standard). Doubles are
// derived from the top 53 bits of the raw output, so equal seeds give
// bit-identical draw sequences on every platform. Single-owner: do not share
// across threads; derive children with fork().
class Prng {
 public:
  explicit Prng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, n), n >= 1 (Lemire multiply-shift reduction).
  std::size_t next_below(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Child generator with a seed derived from (seed, stream) via splitmix64.
  Prng fork(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

// splitmix64 finalizer, used for seed derivation and byte digests.
std::uint64_t mix64(std::uint64_t x);

template <class T>
void shuffle(std::vector<T>& items, Prng& prng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[prng.next_below(i)]);
  }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// result_i = sum_j W_ij x_j + b_i. Throws std::invalid_argument on shape
// mismatch, naming the operands.
Vector affine(const Matrix& w, const Vector& x, const Vector& b);

// Shift-invariant softmax; output sums to 1 within 1e-12.
Vector softmax_stable(const Vector& z);

// log of softmax_stable computed in log space (no underflow at large dims).
Vector log_softmax_stable(const Vector& z);

double l2_norm(const Vector& x);

enum class InitScheme { kUniformScaled, kOrthogonalRecurrent };

const char* to_string(InitScheme scheme);

// kUniformScaled: entries ~ U(-a, a) with a = sqrt(6 / (rows + cols)).
// kOrthogonalRecurrent: square only; orthonormalized random matrix
// (W^T W = I within 1e-10).
Matrix init_params(std::size_t rows, std::size_t cols, InitScheme scheme, Prng& prng);

// Accumulating kernels used by the model and its backward pass.
void accumulate_matvec(const Matrix& w, const Vector& x, Vector& y);             // y += W x
void accumulate_matvec_transposed(const Matrix& w, const Vector& x, Vector& y);  // y += W^T x
void accumulate_column(Vector& y, const Matrix& w, std::size_t col);             // y += W[:, col]
void accumulate_outer(Matrix& w, const Vector& a, const Vector& b);              // W += a b^T
void accumulate_into_column(Matrix& w, std::size_t col, const Vector& a);        // W[:, col] += a

}  // namespace hred
