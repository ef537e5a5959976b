#include "widthlab/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace widthlab {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " +
                     shape_string(b));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (rows == 0 || cols == 0) throw ShapeError("Matrix: dimensions must be >= 1");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) throw ShapeError("Matrix: dimensions must be >= 1");
  if (data_.size() != rows * cols) throw ShapeError("Matrix: data size does not match shape");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("Matrix::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  constexpr std::size_t kBlock = 32;
  for (std::size_t i0 = 0; i0 < a.rows(); i0 += kBlock) {
    const std::size_t i1 = std::min(a.rows(), i0 + kBlock);
    for (std::size_t j0 = 0; j0 < a.cols(); j0 += kBlock) {
      const std::size_t j1 = std::min(a.cols(), j0 + kBlock);
      for (std::size_t i = i0; i < i1; ++i)
        for (std::size_t j = j0; j < j1; ++j) t(j, i) = a(i, j);
    }
  }
  return t;
}

namespace {

constexpr std::size_t kKc = 256;
constexpr std::size_t kNc = 256;

// C[:, j0:j0+jn] += A[:, p0:p1] * P for row-major A (m x k) and a packed
// (p1 - p0) x jn panel P. Full 4 x 16 tiles of C are held in registers for the
// whole p range; they are loaded from C first, so each entry still
// accumulates in ascending p order.
void panel_accumulate(std::size_t m, std::size_t k, std::size_t n, const double* __restrict a,
                      const double* __restrict panel, std::size_t p0, std::size_t p1,
                      std::size_t j0, std::size_t jn, std::size_t ldp, double* __restrict c) {
  constexpr std::size_t kMr = 4;
  constexpr std::size_t kNr = 16;
  using V8 = double __attribute__((vector_size(64)));
  const auto load = [](const double* src) {
    V8 v;
    std::memcpy(&v, src, sizeof v);
    return v;
  };
  const auto store = [](double* dst, V8 v) { std::memcpy(dst, &v, sizeof v); };
  const std::size_t m_full = m - m % kMr;
  const std::size_t j_full = jn - jn % kNr;
  for (std::size_t i = 0; i < m_full; i += kMr) {
    double* __restrict c0 = c + i * n + j0;
    double* __restrict c1 = c0 + n;
    double* __restrict c2 = c1 + n;
    double* __restrict c3 = c2 + n;
    const double* __restrict a0 = a + i * k;
    const double* __restrict a1 = a0 + k;
    const double* __restrict a2 = a1 + k;
    const double* __restrict a3 = a2 + k;
    for (std::size_t j = 0; j < j_full; j += kNr) {
      V8 x00 = load(c0 + j), x01 = load(c0 + j + 8);
      V8 x10 = load(c1 + j), x11 = load(c1 + j + 8);
      V8 x20 = load(c2 + j), x21 = load(c2 + j + 8);
      V8 x30 = load(c3 + j), x31 = load(c3 + j + 8);
      for (std::size_t p = p0; p < p1; ++p) {
        const double* br = panel + (p - p0) * ldp + j;
        const V8 b0 = load(br), b1 = load(br + 8);
        x00 += a0[p] * b0;
        x01 += a0[p] * b1;
        x10 += a1[p] * b0;
        x11 += a1[p] * b1;
        x20 += a2[p] * b0;
        x21 += a2[p] * b1;
        x30 += a3[p] * b0;
        x31 += a3[p] * b1;
      }
      store(c0 + j, x00);
      store(c0 + j + 8, x01);
      store(c1 + j, x10);
      store(c1 + j + 8, x11);
      store(c2 + j, x20);
      store(c2 + j + 8, x21);
      store(c3 + j, x30);
      store(c3 + j + 8, x31);
    }
  }
  // Remainder rows and columns.
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j_begin = i < m_full ? j_full : 0;
    if (j_begin == jn) continue;
    double* __restrict ci = c + i * n + j0;
    for (std::size_t p = p0; p < p1; ++p) {
      const double av = a[i * k + p];
      const double* __restrict br = panel + (p - p0) * ldp;
      for (std::size_t j = j_begin; j < jn; ++j) ci[j] += av * br[j];
    }
  }
}

// C += A * B, or A * B^T when b_transposed (B then stored n x k). Blocks over
// k and n so a panel of B stays in L2. Every C entry accumulates over p in
// ascending order, so results do not depend on the blocking or the layout.
void gemm_accumulate(std::size_t m, std::size_t k, std::size_t n, const double* __restrict a,
                     const double* __restrict b, bool b_transposed, double* __restrict c) {
  std::vector<double> pack;
  if (b_transposed) pack.resize(std::min(k, kKc) * std::min(n, kNc));
  for (std::size_t j0 = 0; j0 < n; j0 += kNc) {
    const std::size_t jn = std::min(n, j0 + kNc) - j0;
    for (std::size_t p0 = 0; p0 < k; p0 += kKc) {
      const std::size_t p1 = std::min(k, p0 + kKc);
      if (!b_transposed) {
        panel_accumulate(m, k, n, a, b + p0 * n + j0, p0, p1, j0, jn, n, c);
        continue;
      }
      constexpr std::size_t kTile = 8;
      for (std::size_t jt = 0; jt < jn; jt += kTile) {
        const std::size_t je = std::min(jn, jt + kTile);
        for (std::size_t pt = p0; pt < p1; pt += kTile) {
          const std::size_t pe = std::min(p1, pt + kTile);
          for (std::size_t j = jt; j < je; ++j) {
            const double* __restrict src = b + (j0 + j) * k;
            for (std::size_t p = pt; p < pe; ++p) pack[(p - p0) * jn + j] = src[p];
          }
        }
      }
      panel_accumulate(m, k, n, a, pack.data(), p0, p1, j0, jn, jn, c);
    }
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ " + shape_string(a) + " * " +
                     shape_string(b));
  }
  Matrix c(a.rows(), b.cols());
  gemm_accumulate(a.rows(), a.cols(), b.cols(), a.data(), b.data(), false, c.data());
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: row counts differ " + shape_string(a) + " vs " +
                     shape_string(b));
  }
  const Matrix at = transpose(a);
  Matrix c(a.cols(), b.cols());
  gemm_accumulate(at.rows(), at.cols(), b.cols(), at.data(), b.data(), false, c.data());
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: column counts differ " + shape_string(a) + " vs " +
                     shape_string(b));
  }
  Matrix c(a.rows(), b.rows());
  gemm_accumulate(a.rows(), a.cols(), b.rows(), a.data(), b.data(), true, c.data());
  return c;
}

Vector matvec(const Matrix& w, std::span<const double> x) {
  if (x.size() != w.cols()) throw ShapeError("matvec: vector length mismatch");
  Vector y(w.rows(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) y[i] = dot(w.row(i), x);
  return y;
}

Vector matvec_t(const Matrix& w, std::span<const double> y) {
  if (y.size() != w.rows()) throw ShapeError("matvec_t: vector length mismatch");
  Vector x(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double yi = y[i];
    const auto r = w.row(i);
    for (std::size_t j = 0; j < w.cols(); ++j) x[j] += yi * r[j];
  }
  return x;
}

void axpy(double alpha, const Matrix& x, Matrix& y) {
  require_same_shape(x, y, "axpy");
  const double* __restrict xp = x.data();
  double* __restrict yp = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) yp[i] += alpha * xp[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

bool all_finite(std::span<const double> v) noexcept {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

bool all_finite(const Matrix& a) noexcept { return all_finite(a.values()); }

std::string shape_string(const Matrix& a) {
  return "(" + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + ")";
}

}  // namespace widthlab
