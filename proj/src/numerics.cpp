#include "hred/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hred {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

Prng Prng::fork(std::uint64_t stream) const {
  return Prng(mix64(seed_ ^ mix64(stream + 1)));
}

Vector affine(const Matrix& w, const Vector& x, const Vector& b) {
  if (w.cols() != x.dim() || w.rows() != b.dim()) {
    throw std::invalid_argument(
        "affine: shape mismatch, W is " + std::to_string(w.rows()) + "x" +
        std::to_string(w.cols()) + ", x.dim=" + std::to_string(x.dim()) +
        ", b.dim=" + std::to_string(b.dim()));
  }
  Vector out(w.rows());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double* row = w.row(i);
    double acc = b[i];
    for (std::size_t j = 0; j < w.cols(); ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
  return out;
}

Vector softmax_stable(const Vector& z) {
  Vector out(z.dim());
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.dim(); ++i) {
    out[i] = std::exp(z[i] - zmax);
    sum += out[i];
  }
  for (std::size_t i = 0; i < z.dim(); ++i) out[i] /= sum;
  return out;
}

Vector log_softmax_stable(const Vector& z) {
  Vector out(z.dim());
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.dim(); ++i) sum += std::exp(z[i] - zmax);
  const double log_norm = zmax + std::log(sum);
  for (std::size_t i = 0; i < z.dim(); ++i) out[i] = z[i] - log_norm;
  return out;
}

double l2_norm(const Vector& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc);
}

const char* to_string(InitScheme scheme) {
  return scheme == InitScheme::kUniformScaled ? "uniform-scaled" : "orthogonal-recurrent";
}

namespace {

// Modified Gram-Schmidt over rows, with one re-orthogonalization pass.
void orthonormalize_rows(Matrix& m, Prng& prng, double bound) {
  const std::size_t n = m.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (int attempt = 0;; ++attempt) {
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < i; ++j) {
          double dot = 0.0;
          for (std::size_t k = 0; k < n; ++k) dot += m(i, k) * m(j, k);
          for (std::size_t k = 0; k < n; ++k) m(i, k) -= dot * m(j, k);
        }
      }
      double norm = 0.0;
      for (std::size_t k = 0; k < n; ++k) norm += m(i, k) * m(i, k);
      norm = std::sqrt(norm);
      if (norm > 1e-8 || attempt > 16) {
        for (std::size_t k = 0; k < n; ++k) m(i, k) /= norm;
        break;
      }
      // Degenerate row, redraw it.
      for (std::size_t k = 0; k < n; ++k) m(i, k) = prng.uniform(-bound, bound);
    }
  }
}

}  // namespace

Matrix init_params(std::size_t rows, std::size_t cols, InitScheme scheme, Prng& prng) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("init_params: empty shape " + std::to_string(rows) +
                                "x" + std::to_string(cols));
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = prng.uniform(-bound, bound);
  if (scheme == InitScheme::kOrthogonalRecurrent) {
    if (rows != cols) {
      throw std::invalid_argument("init_params: orthogonal-recurrent requires a square "
                                  "matrix, got " + std::to_string(rows) + "x" +
                                  std::to_string(cols));
    }
    orthonormalize_rows(m, prng, bound);
  }
  return m;
}

void accumulate_matvec(const Matrix& w, const Vector& x, Vector& y) {
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double* row = w.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < w.cols(); ++j) acc += row[j] * x[j];
    y[i] += acc;
  }
}

void accumulate_matvec_transposed(const Matrix& w, const Vector& x, Vector& y) {
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double* row = w.row(i);
    const double xi = x[i];
    for (std::size_t j = 0; j < w.cols(); ++j) y[j] += row[j] * xi;
  }
}

void accumulate_column(Vector& y, const Matrix& w, std::size_t col) {
  for (std::size_t i = 0; i < w.rows(); ++i) y[i] += w(i, col);
}

void accumulate_outer(Matrix& w, const Vector& a, const Vector& b) {
  for (std::size_t i = 0; i < w.rows(); ++i) {
    double* row = w.row(i);
    const double ai = a[i];
    for (std::size_t j = 0; j < w.cols(); ++j) row[j] += ai * b[j];
  }
}

void accumulate_into_column(Matrix& w, std::size_t col, const Vector& a) {
  for (std::size_t i = 0; i < w.rows(); ++i) w(i, col) += a[i];
}

}  // namespace hred
