#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace convlim {

// Which l^p norm a computation refers to. p = 1, 2 and infinity have
// closed-form induced matrix norms; any other finite p >= 1 is carried as
// `general` and only admits bounds at the matrix level.
class PNorm {
 public:
  enum class Kind { one, two, infinity, general };

  static PNorm one() { return PNorm(Kind::one, 1.0); }
  static PNorm two() { return PNorm(Kind::two, 2.0); }
  static PNorm infinity() { return PNorm(Kind::infinity, 0.0); }
  static PNorm general(double p);

  Kind kind() const { return kind_; }
  // Finite exponent; meaningless for kind infinity.
  double exponent() const { return exponent_; }
  bool is_exact_kind() const { return kind_ != Kind::general; }

 private:
  PNorm(Kind kind, double exponent) : kind_(kind), exponent_(exponent) {}
  Kind kind_;
  double exponent_;
};

// Dense real matrix, row-major. Rows and columns are always >= 1.
class Matrix {
 public:
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_.data() + i * cols_, cols_);
  }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
std::vector<double> matvec(const Matrix& a, std::span<const double> x);
Matrix subtract(const Matrix& a, const Matrix& b);

// I_{m',m}: identity on top of an (m'-m) x m zero block. The padded
// interpretation with infinitely many zero rows is never materialized;
// zero_extend* implement its action.
struct EmbeddingMatrix {
  std::size_t target_rows;
  std::size_t source_cols;

  EmbeddingMatrix(std::size_t target_rows, std::size_t source_cols);
};

Matrix materialize(const EmbeddingMatrix& e);
std::vector<double> zero_extend(std::span<const double> v, std::size_t length);
Matrix zero_extend_rows(const Matrix& a, std::size_t rows);

// Diagonal 0/1 matrix of a given width, stored as its support set.
class ActivationMatrix {
 public:
  explicit ActivationMatrix(std::size_t width) : on_(width, false) {}

  static ActivationMatrix full(std::size_t width);
  static ActivationMatrix from_support(std::size_t width, std::span<const std::size_t> support);

  std::size_t width() const { return on_.size(); }
  bool is_on(std::size_t j) const { return on_[j]; }
  void set(std::size_t j, bool value);
  std::size_t support_size() const;
  std::vector<std::size_t> support() const;

  bool operator==(const ActivationMatrix& other) const = default;

 private:
  std::vector<bool> on_;
};

// supp(a) ∩ supp(b) for equal widths.
ActivationMatrix intersect(const ActivationMatrix& a, const ActivationMatrix& b);

// l^p norm of a vector; the empty vector has norm 0.
double vector_pnorm(std::span<const double> v, const PNorm& p);

// max(v, 0) componentwise.
std::vector<double> relu(std::span<const double> v);

// Support of the strictly positive entries. Entries equal to 0 are off.
ActivationMatrix relu_pattern(std::span<const double> v);

// J * v: keeps entries on the support, zeroes the rest.
std::vector<double> apply_activation(const ActivationMatrix& j, std::span<const double> v);

// J * A: zeroes the rows of A outside the support.
Matrix apply_activation_rows(const ActivationMatrix& j, const Matrix& a);

// Induced matrix p-norm for p in {1, 2, infinity}. p = 1 is the max column
// absolute sum, p = infinity the max row absolute sum, p = 2 the largest
// singular value (power iteration on A^T A, relative tolerance 1e-12,
// iteration cap 10^4, deterministic start). Throws on a general exponent.
double induced_norm_exact(const Matrix& a, const PNorm& p);

struct NormBounds {
  double lower;
  double upper;
};

// Enclosure of the induced p-norm for any p >= 1. The upper bound is the
// interpolation bound ||A||_1^{1/p} ||A||_inf^{1-1/p}; the lower bound is the
// best Rayleigh-style ratio ||Ax||_p / ||x||_p over the canonical basis and
// `samples` seeded random vectors.
NormBounds induced_norm_bounds(const Matrix& a, const PNorm& p,
                               std::uint64_t seed = 0x9e3779b97f4a7c15ull,
                               std::size_t samples = 64);

}  // namespace convlim
