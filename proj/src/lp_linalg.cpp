#include "convlim/lp_linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace convlim {

PNorm PNorm::general(double p) {
  if (!(p >= 1.0) || std::isinf(p)) {
    throw std::invalid_argument("PNorm::general requires a finite exponent p >= 1");
  }
  return PNorm(Kind::general, p);
}

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("Matrix requires rows >= 1 and cols >= 1");
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : Matrix(rows.size(), rows.size() ? rows.begin()->size() : 0) {
  std::size_t i = 0;
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw std::invalid_argument("Matrix initializer rows have unequal lengths");
    }
    std::size_t j = 0;
    for (double v : r) (*this)(i, j++) = v;
    ++i;
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions do not match");
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) {
        c(i, j) += aik * b(k, j);
      }
    }
  }
  return c;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) {
    throw std::invalid_argument("matvec: dimension mismatch");
  }
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("subtract: shape mismatch");
  }
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
  return c;
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t target_rows_, std::size_t source_cols_)
    : target_rows(target_rows_), source_cols(source_cols_) {
  if (source_cols == 0 || target_rows < source_cols) {
    throw std::invalid_argument("EmbeddingMatrix requires target_rows >= source_cols >= 1");
  }
}

Matrix materialize(const EmbeddingMatrix& e) {
  Matrix m(e.target_rows, e.source_cols);
  for (std::size_t i = 0; i < e.source_cols; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> zero_extend(std::span<const double> v, std::size_t length) {
  if (length < v.size()) {
    throw std::invalid_argument("zero_extend: target length shorter than input");
  }
  std::vector<double> out(length, 0.0);
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

Matrix zero_extend_rows(const Matrix& a, std::size_t rows) {
  if (rows < a.rows()) {
    throw std::invalid_argument("zero_extend_rows: target rows fewer than input rows");
  }
  Matrix out(rows, a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
  return out;
}

ActivationMatrix ActivationMatrix::full(std::size_t width) {
  ActivationMatrix j(width);
  for (std::size_t i = 0; i < width; ++i) j.on_[i] = true;
  return j;
}

ActivationMatrix ActivationMatrix::from_support(std::size_t width,
                                                std::span<const std::size_t> support) {
  ActivationMatrix j(width);
  for (std::size_t idx : support) j.set(idx, true);
  return j;
}

void ActivationMatrix::set(std::size_t j, bool value) {
  if (j >= on_.size()) {
    throw std::invalid_argument("ActivationMatrix::set: index beyond width");
  }
  on_[j] = value;
}

std::size_t ActivationMatrix::support_size() const {
  return static_cast<std::size_t>(std::count(on_.begin(), on_.end(), true));
}

std::vector<std::size_t> ActivationMatrix::support() const {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < on_.size(); ++i)
    if (on_[i]) s.push_back(i);
  return s;
}

ActivationMatrix intersect(const ActivationMatrix& a, const ActivationMatrix& b) {
  if (a.width() != b.width()) {
    throw std::invalid_argument("intersect: activation widths differ");
  }
  ActivationMatrix out(a.width());
  for (std::size_t i = 0; i < a.width(); ++i) out.set(i, a.is_on(i) && b.is_on(i));
  return out;
}

double vector_pnorm(std::span<const double> v, const PNorm& p) {
  switch (p.kind()) {
    case PNorm::Kind::one: {
      double s = 0.0;
      for (double x : v) s += std::abs(x);
      return s;
    }
    case PNorm::Kind::two: {
      double s = 0.0;
      for (double x : v) s += x * x;
      return std::sqrt(s);
    }
    case PNorm::Kind::infinity: {
      double m = 0.0;
      for (double x : v) m = std::max(m, std::abs(x));
      return m;
    }
    case PNorm::Kind::general: {
      // Scale by the max to keep pow() away from overflow/underflow.
      double m = 0.0;
      for (double x : v) m = std::max(m, std::abs(x));
      if (m == 0.0) return 0.0;
      double s = 0.0;
      for (double x : v) s += std::pow(std::abs(x) / m, p.exponent());
      return m * std::pow(s, 1.0 / p.exponent());
    }
  }
  return 0.0;
}

std::vector<double> relu(std::span<const double> v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? v[i] : 0.0;
  return out;
}

ActivationMatrix relu_pattern(std::span<const double> v) {
  ActivationMatrix j(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) j.set(i, v[i] > 0.0);
  return j;
}

std::vector<double> apply_activation(const ActivationMatrix& j, std::span<const double> v) {
  if (j.width() != v.size()) {
    throw std::invalid_argument("apply_activation: width mismatch");
  }
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (j.is_on(i)) out[i] = v[i];
  return out;
}

Matrix apply_activation_rows(const ActivationMatrix& j, const Matrix& a) {
  if (j.width() != a.rows()) {
    throw std::invalid_argument("apply_activation_rows: width does not match rows");
  }
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (!j.is_on(i)) continue;
    for (std::size_t k = 0; k < a.cols(); ++k) out(i, k) = a(i, k);
  }
  return out;
}

namespace {

double max_column_abs_sum(const Matrix& a) {
  std::vector<double> sums(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) sums[j] += std::abs(a(i, j));
  return *std::max_element(sums.begin(), sums.end());
}

double max_row_abs_sum(const Matrix& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += std::abs(a(i, j));
    best = std::max(best, s);
  }
  return best;
}

void normalize_l2(std::vector<double>& v) {
  double n = vector_pnorm(v, PNorm::two());
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
}

// x <- A^T (A x).
std::vector<double> gram_apply(const Matrix& a, std::span<const double> x) {
  std::vector<double> y = matvec(a, x);
  std::vector<double> z(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double yi = y[i];
    if (yi == 0.0) continue;
    for (std::size_t j = 0; j < a.cols(); ++j) z[j] += a(i, j) * yi;
  }
  return z;
}

constexpr double kSpectralRelTol = 1e-12;
constexpr std::size_t kSpectralMaxIter = 10000;

double spectral_norm(const Matrix& a) {
  bool all_zero = true;
  for (double v : a.data())
    if (v != 0.0) {
      all_zero = false;
      break;
    }
  if (all_zero) return 0.0;

  std::vector<double> x(a.cols(), 1.0);
  normalize_l2(x);
  double lambda_prev = -1.0;
  double lambda = 0.0;
  bool perturbed = false;
  for (std::size_t it = 0; it < kSpectralMaxIter; ++it) {
    std::vector<double> z = gram_apply(a, x);
    double zn = vector_pnorm(z, PNorm::two());
    if (zn == 0.0) {
      // Start landed in the null space; restart with a ramp.
      if (perturbed) return 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) x[j] = double(j + 1);
      normalize_l2(x);
      perturbed = true;
      lambda_prev = -1.0;
      continue;
    }
    lambda = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) lambda += x[j] * z[j];
    x = std::move(z);
    normalize_l2(x);
    if (lambda_prev >= 0.0 && std::abs(lambda - lambda_prev) <= kSpectralRelTol * lambda) {
      if (!perturbed) {
        // Guard against a start vector orthogonal to the top singular
        // direction: nudge once and keep iterating.
        for (std::size_t j = 0; j < x.size(); ++j) x[j] += 1e-6 * double(j + 1) / double(x.size());
        normalize_l2(x);
        perturbed = true;
        lambda_prev = -1.0;
        continue;
      }
      break;
    }
    lambda_prev = lambda;
  }
  return std::sqrt(std::max(lambda, 0.0));
}

}  // namespace

double induced_norm_exact(const Matrix& a, const PNorm& p) {
  switch (p.kind()) {
    case PNorm::Kind::one:
      return max_column_abs_sum(a);
    case PNorm::Kind::infinity:
      return max_row_abs_sum(a);
    case PNorm::Kind::two:
      return spectral_norm(a);
    case PNorm::Kind::general:
      throw std::invalid_argument(
          "induced_norm_exact: no closed form for general p; use induced_norm_bounds");
  }
  return 0.0;
}

NormBounds induced_norm_bounds(const Matrix& a, const PNorm& p, std::uint64_t seed,
                               std::size_t samples) {
  const double n1 = max_column_abs_sum(a);
  const double ninf = max_row_abs_sum(a);
  double inv_p;
  switch (p.kind()) {
    case PNorm::Kind::one: inv_p = 1.0; break;
    case PNorm::Kind::two: inv_p = 0.5; break;
    case PNorm::Kind::infinity: inv_p = 0.0; break;
    case PNorm::Kind::general: inv_p = 1.0 / p.exponent(); break;
    default: inv_p = 0.0; break;
  }
  double upper;
  if (n1 == 0.0 && ninf == 0.0) {
    upper = 0.0;
  } else {
    upper = std::pow(n1, inv_p) * std::pow(ninf, 1.0 - inv_p);
  }

  double lower = 0.0;
  auto consider = [&](std::span<const double> x) {
    double xn = vector_pnorm(x, p);
    if (xn == 0.0) return;
    std::vector<double> ax = matvec(a, x);
    lower = std::max(lower, vector_pnorm(ax, p) / xn);
  };
  std::vector<double> x(a.cols(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j) {
    x.assign(a.cols(), 0.0);
    x[j] = 1.0;
    consider(x);
  }
  std::mt19937_64 rng(seed);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      // Map the top 53 bits to [0,1) to stay reproducible across platforms.
      double u = double(rng() >> 11) * 0x1.0p-53;
      x[j] = 2.0 * u - 1.0;
    }
    consider(x);
  }
  lower = std::min(lower, upper);
  return NormBounds{lower, upper};
}

}  // namespace convlim
