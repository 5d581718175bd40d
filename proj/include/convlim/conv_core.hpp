#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "convlim/lp_linalg.hpp"

namespace convlim {

// Thrown by operations that would divide by a zero center coefficient w_0.
struct zero_center_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Convolution mask w = (w_0, ..., w_s). w_0 multiplies the aligned input
// entry; masks with w_0 = 0 are valid data but cannot be normalized.
struct FilterMask {
  std::vector<double> coefficients;

  explicit FilterMask(std::vector<double> coeffs);
  FilterMask(std::initializer_list<double> coeffs)
      : FilterMask(std::vector<double>(coeffs)) {}

  std::size_t tail_size() const { return coefficients.size() - 1; }  // s
  double center() const { return coefficients.front(); }             // w_0
};

// y_i = sum_j w_j x_{i-j}; output has length |x| + s.
std::vector<double> convolve(std::span<const double> x, const FilterMask& w);

// The (m+s) x m matrix with T(i,j) = w_{i-j} on the band 0 <= i-j <= s and
// zeros elsewhere, so that toeplitz(w, m) * x == convolve(x, w).
Matrix toeplitz(const FilterMask& w, std::size_t m);

// Non-decreasing layer output widths m_0 = d, m_1, m_2, ...
struct WidthSchedule {
  std::size_t input_dim;
  std::vector<std::size_t> widths;  // widths[n] = m_n, widths[0] == input_dim

  WidthSchedule(std::size_t d, std::vector<std::size_t> ms);

  std::size_t depth() const { return widths.size() - 1; }
  std::size_t width_at(std::size_t n) const;  // m_n
};

// m_0 = d, m_n = m_{n-1} + s_n.
WidthSchedule cnn_widths(std::size_t d, std::span<const std::size_t> tail_sizes);

// Named constructor for a convolutional layer weight W_n; identical to
// toeplitz(w, m_prev).
Matrix cnn_weight_matrix(const FilterMask& w, std::size_t m_prev);

// W / c = I_{m',m} + P, with P returned explicitly.
struct ShiftDecomposition {
  EmbeddingMatrix embedding;
  Matrix perturbation;
};

// Splits W (rows >= cols) into embedding plus perturbation, optionally after
// dividing by `normalize_by` (must be nonzero when given).
ShiftDecomposition shift_decompose(const Matrix& w,
                                   std::optional<double> normalize_by = std::nullopt);

// (sum_{j>=1} |w_j|) / |w_0|; dominates every induced p-norm of the
// perturbation block of the normalized layer weight.
double mask_ratio_sum_term(const FilterMask& w);

// Weight of one layer, either dense or held as a mask and applied
// matrix-free. Dense materialization of a conv weight is capped at 4096
// columns; evaluation paths never materialize.
class LayerWeight {
 public:
  static LayerWeight dense(Matrix w);
  static LayerWeight conv(FilterMask w, std::size_t input_width);

  std::size_t rows() const;
  std::size_t cols() const;
  bool is_conv() const { return std::holds_alternative<ConvRep>(rep_); }
  const FilterMask* mask() const;
  const Matrix* dense_matrix() const;

  std::vector<double> apply(std::span<const double> x) const;  // W x
  Matrix apply_to_columns(const Matrix& a) const;              // W A
  Matrix materialized() const;

 private:
  struct ConvRep {
    FilterMask mask;
    std::size_t input_width;
  };
  explicit LayerWeight(std::variant<Matrix, ConvRep> rep) : rep_(std::move(rep)) {}
  std::variant<Matrix, ConvRep> rep_;
};

// Mask sequence files: a JSON array of arrays of numbers; entry n-1 holds
// the mask of layer n.
std::vector<FilterMask> load_mask_sequence(const std::filesystem::path& path);
void save_mask_sequence(const std::filesystem::path& path, std::span<const FilterMask> masks);

}  // namespace convlim
