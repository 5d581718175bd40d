#include "convlim/conv_core.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace convlim {

namespace {
constexpr std::size_t kDenseMaterializationCap = 4096;
}

FilterMask::FilterMask(std::vector<double> coeffs) : coefficients(std::move(coeffs)) {
  if (coefficients.empty()) {
    throw std::invalid_argument("FilterMask requires at least the center coefficient");
  }
}

std::vector<double> convolve(std::span<const double> x, const FilterMask& w) {
  const std::size_t m = x.size();
  if (m == 0) {
    throw std::invalid_argument("convolve: input vector is empty");
  }
  const std::size_t s = w.tail_size();
  std::vector<double> y(m + s, 0.0);
  for (std::size_t i = 0; i < m + s; ++i) {
    const std::size_t j_lo = i >= m ? i - m + 1 : 0;
    const std::size_t j_hi = std::min(i, s);
    // Descending mask index accumulates in the same order as the Toeplitz
    // matvec, so the two routes agree exactly.
    double acc = 0.0;
    for (std::size_t j = j_hi + 1; j-- > j_lo;) {
      acc += w.coefficients[j] * x[i - j];
    }
    y[i] = acc;
  }
  return y;
}

Matrix toeplitz(const FilterMask& w, std::size_t m) {
  if (m == 0) {
    throw std::invalid_argument("toeplitz: m must be >= 1");
  }
  const std::size_t s = w.tail_size();
  Matrix t(m + s, m);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k <= s; ++k) {
      t(j + k, j) = w.coefficients[k];
    }
  }
  return t;
}

WidthSchedule::WidthSchedule(std::size_t d, std::vector<std::size_t> ms)
    : input_dim(d), widths(std::move(ms)) {
  if (d == 0) throw std::invalid_argument("WidthSchedule: input dimension must be >= 1");
  if (widths.empty() || widths.front() != d) {
    throw std::invalid_argument("WidthSchedule: widths must start with m_0 = d");
  }
  for (std::size_t n = 1; n < widths.size(); ++n) {
    if (widths[n] < widths[n - 1]) {
      throw std::invalid_argument("WidthSchedule: widths must be non-decreasing");
    }
  }
}

std::size_t WidthSchedule::width_at(std::size_t n) const {
  if (n >= widths.size()) {
    throw std::out_of_range("WidthSchedule: depth beyond schedule");
  }
  return widths[n];
}

WidthSchedule cnn_widths(std::size_t d, std::span<const std::size_t> tail_sizes) {
  std::vector<std::size_t> ms;
  ms.reserve(tail_sizes.size() + 1);
  ms.push_back(d);
  for (std::size_t s : tail_sizes) ms.push_back(ms.back() + s);
  return WidthSchedule(d, std::move(ms));
}

Matrix cnn_weight_matrix(const FilterMask& w, std::size_t m_prev) {
  return toeplitz(w, m_prev);
}

ShiftDecomposition shift_decompose(const Matrix& w, std::optional<double> normalize_by) {
  if (w.rows() < w.cols()) {
    throw std::invalid_argument("shift_decompose: requires rows >= cols");
  }
  const double c = normalize_by.value_or(1.0);
  if (c == 0.0) {
    throw zero_center_error("shift_decompose: normalize_by must be nonzero");
  }
  Matrix p(w.rows(), w.cols());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      p(i, j) = w(i, j) / c;
    }
  }
  for (std::size_t j = 0; j < w.cols(); ++j) p(j, j) -= 1.0;
  return ShiftDecomposition{EmbeddingMatrix(w.rows(), w.cols()), std::move(p)};
}

double mask_ratio_sum_term(const FilterMask& w) {
  if (w.center() == 0.0) {
    throw zero_center_error("mask_ratio_sum_term: center coefficient w_0 is zero");
  }
  double tail = 0.0;
  for (std::size_t j = 1; j < w.coefficients.size(); ++j) tail += std::abs(w.coefficients[j]);
  return tail / std::abs(w.center());
}

LayerWeight LayerWeight::dense(Matrix w) { return LayerWeight(std::variant<Matrix, ConvRep>(std::move(w))); }

LayerWeight LayerWeight::conv(FilterMask w, std::size_t input_width) {
  if (input_width == 0) {
    throw std::invalid_argument("LayerWeight::conv: input width must be >= 1");
  }
  return LayerWeight(std::variant<Matrix, ConvRep>(ConvRep{std::move(w), input_width}));
}

std::size_t LayerWeight::rows() const {
  if (const auto* m = std::get_if<Matrix>(&rep_)) return m->rows();
  const auto& c = std::get<ConvRep>(rep_);
  return c.input_width + c.mask.tail_size();
}

std::size_t LayerWeight::cols() const {
  if (const auto* m = std::get_if<Matrix>(&rep_)) return m->cols();
  return std::get<ConvRep>(rep_).input_width;
}

const FilterMask* LayerWeight::mask() const {
  if (const auto* c = std::get_if<ConvRep>(&rep_)) return &c->mask;
  return nullptr;
}

const Matrix* LayerWeight::dense_matrix() const { return std::get_if<Matrix>(&rep_); }

std::vector<double> LayerWeight::apply(std::span<const double> x) const {
  if (x.size() != cols()) {
    throw std::invalid_argument("LayerWeight::apply: dimension mismatch");
  }
  if (const auto* m = std::get_if<Matrix>(&rep_)) return matvec(*m, x);
  return convolve(x, std::get<ConvRep>(rep_).mask);
}

Matrix LayerWeight::apply_to_columns(const Matrix& a) const {
  if (a.rows() != cols()) {
    throw std::invalid_argument("LayerWeight::apply_to_columns: dimension mismatch");
  }
  if (const auto* m = std::get_if<Matrix>(&rep_)) return matmul(*m, a);
  const auto& c = std::get<ConvRep>(rep_);
  Matrix out(rows(), a.cols());
  std::vector<double> col(a.rows());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    for (std::size_t i = 0; i < a.rows(); ++i) col[i] = a(i, j);
    std::vector<double> y = convolve(col, c.mask);
    for (std::size_t i = 0; i < y.size(); ++i) out(i, j) = y[i];
  }
  return out;
}

Matrix LayerWeight::materialized() const {
  if (const auto* m = std::get_if<Matrix>(&rep_)) return *m;
  const auto& c = std::get<ConvRep>(rep_);
  if (c.input_width > kDenseMaterializationCap) {
    throw std::invalid_argument(
        "LayerWeight::materialized: conv weight too wide to materialize; apply matrix-free");
  }
  return toeplitz(c.mask, c.input_width);
}

std::vector<FilterMask> load_mask_sequence(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open mask sequence file: " + path.string());
  }
  nlohmann::json j;
  in >> j;
  if (!j.is_array()) {
    throw std::runtime_error("mask sequence file must hold a JSON array of arrays");
  }
  std::vector<FilterMask> masks;
  masks.reserve(j.size());
  for (const auto& entry : j) {
    if (!entry.is_array() || entry.empty()) {
      throw std::runtime_error("each mask must be a nonempty JSON array of numbers");
    }
    masks.emplace_back(entry.get<std::vector<double>>());
  }
  return masks;
}

void save_mask_sequence(const std::filesystem::path& path, std::span<const FilterMask> masks) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& m : masks) j.push_back(m.coefficients);
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write mask sequence file: " + path.string());
  }
  out << j.dump() << "\n";
}

}  // namespace convlim
