#include "convlim/product_limits.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace convlim {

namespace {

Matrix padded_difference(const PaddedOperator& a, const PaddedOperator& b) {
  if (a.active.cols() != b.active.cols()) {
    throw std::invalid_argument("padded_distance: operators have different column counts");
  }
  const std::size_t rows = std::max(a.active.rows(), b.active.rows());
  Matrix diff(rows, a.active.cols());
  for (std::size_t i = 0; i < a.active.rows(); ++i)
    for (std::size_t j = 0; j < a.active.cols(); ++j) diff(i, j) = a.active(i, j);
  for (std::size_t i = 0; i < b.active.rows(); ++i)
    for (std::size_t j = 0; j < b.active.cols(); ++j) diff(i, j) -= b.active(i, j);
  return diff;
}

}  // namespace

double padded_distance(const PaddedOperator& a, const PaddedOperator& b, const PNorm& p) {
  Matrix diff = padded_difference(a, b);
  if (p.is_exact_kind()) return induced_norm_exact(diff, p);
  return induced_norm_bounds(diff, p).upper;
}

NormBounds padded_distance_bounds(const PaddedOperator& a, const PaddedOperator& b,
                                  const PNorm& p) {
  Matrix diff = padded_difference(a, b);
  if (p.is_exact_kind()) {
    const double exact = induced_norm_exact(diff, p);
    return NormBounds{exact, exact};
  }
  return induced_norm_bounds(diff, p);
}

ProductState initial_product_state(std::size_t d) {
  if (d == 0) throw std::invalid_argument("initial_product_state: d must be >= 1");
  return ProductState{0, PaddedOperator{Matrix::identity(d)},
                      PaddedVector{std::vector<double>(d, 0.0)},
                      WidthSchedule(d, {d})};
}

ProductState extend_product(const ProductState& state, const ActivationMatrix& j,
                            const LayerWeight& w, std::span<const double> b) {
  const std::size_t m_prev = state.widths.widths.back();
  if (w.cols() != m_prev) {
    throw std::invalid_argument("extend_product: weight columns do not match the state width");
  }
  if (w.rows() < w.cols()) {
    throw std::invalid_argument("extend_product: widths must be non-decreasing");
  }
  if (j.width() != w.rows() || b.size() != w.rows()) {
    throw std::invalid_argument("extend_product: activation or bias width mismatch");
  }
  Matrix next = apply_activation_rows(j, w.apply_to_columns(state.current.active));
  std::vector<double> z = w.apply(state.bias_accum.values);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += b[i];
  std::vector<double> bias = apply_activation(j, z);

  std::vector<std::size_t> ms = state.widths.widths;
  ms.push_back(w.rows());
  return ProductState{state.depth + 1, PaddedOperator{std::move(next)},
                      PaddedVector{std::move(bias)},
                      WidthSchedule(state.widths.input_dim, std::move(ms))};
}

ProductState extend_product(const ProductState& state, const ActivationMatrix& j,
                            const Matrix& w, std::span<const double> b) {
  return extend_product(state, j, LayerWeight::dense(w), b);
}

StabilizedProduct stabilized_activation_product(const WidthSchedule& widths, std::size_t k,
                                                std::span<const ActivationMatrix> js) {
  if (k == 0) {
    throw std::invalid_argument("stabilized_activation_product: layers are numbered from 1");
  }
  const std::size_t n = k - 1 + js.size();
  if (n > widths.depth()) {
    throw std::invalid_argument("stabilized_activation_product: schedule shorter than k+|js|-1");
  }
  const std::size_t base_width = widths.width_at(k - 1);
  ActivationMatrix support = ActivationMatrix::full(base_width);
  std::size_t last_change = 0;
  for (std::size_t idx = 0; idx < js.size(); ++idx) {
    const std::size_t layer = k + idx;
    const ActivationMatrix& ji = js[idx];
    if (ji.width() != widths.width_at(layer)) {
      throw std::invalid_argument("stabilized_activation_product: J width does not match m_i");
    }
    bool changed = false;
    for (std::size_t bit = 0; bit < base_width; ++bit) {
      if (support.is_on(bit) && !ji.is_on(bit)) {
        support.set(bit, false);
        changed = true;
      }
    }
    if (changed) last_change = layer;
  }
  Matrix product(widths.width_at(n), base_width);
  for (std::size_t bit = 0; bit < base_width; ++bit)
    if (support.is_on(bit)) product(bit, bit) = 1.0;
  return StabilizedProduct{std::move(support), std::move(product), last_change};
}

double series_inequality_lhs(std::span<const double> a, std::size_t q) {
  if (a.size() > 20) {
    throw std::invalid_argument("series_inequality_lhs: n must be <= 20");
  }
  double full = 1.0;
  double head = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0.0) {
      throw std::invalid_argument("series_inequality_lhs: entries must be nonnegative");
    }
    full *= 1.0 + a[i];
    if (i < q) head *= 1.0 + a[i];
  }
  return full - head;
}

TailEstimate tail_bound(std::span<const double> p_norms, std::size_t q) {
  double tail = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < p_norms.size(); ++i) {
    if (p_norms[i] < 0.0) {
      throw std::invalid_argument("tail_bound: norm entries must be nonnegative");
    }
    total += p_norms[i];
    if (i + 1 > q) tail += p_norms[i];
  }
  return TailEstimate{q, tail, total, 2.0 * tail * std::exp(total)};
}

ConvergenceReport detect_convergence(std::span<const ProductState> states, const PNorm& p,
                                     double tol, std::size_t window,
                                     std::span<const double> declared_majorants) {
  if (states.size() < window + 1) {
    throw std::invalid_argument("detect_convergence: need at least window+1 states");
  }
  for (std::size_t i = 1; i < states.size(); ++i) {
    if (states[i].depth <= states[i - 1].depth) {
      throw std::invalid_argument("detect_convergence: states must be at increasing depths");
    }
  }
  if (!declared_majorants.empty() && declared_majorants.size() < states.back().depth) {
    throw std::invalid_argument(
        "detect_convergence: majorants must cover every layer up to the deepest state");
  }
  ConvergenceReport report{true,
                           declared_majorants.empty(),
                           std::numeric_limits<double>::infinity(),
                           {},
                           {},
                           states.back()};
  if (!declared_majorants.empty()) {
    report.window_tail_bound =
        tail_bound(declared_majorants, states[states.size() - (window + 1)].depth).bound;
  }
  for (std::size_t i = 1; i < states.size(); ++i) {
    report.operator_residuals.push_back(
        padded_distance(states[i - 1].current, states[i].current, p));
    report.bias_residuals.push_back(
        padded_diff_pnorm(states[i - 1].bias_accum, states[i].bias_accum, p));
  }
  const std::size_t first = states.size() - (window + 1);
  for (std::size_t i = first; i < states.size() && report.converged; ++i) {
    for (std::size_t j = i + 1; j < states.size(); ++j) {
      const double op = padded_distance(states[i].current, states[j].current, p);
      const double bias = padded_diff_pnorm(states[i].bias_accum, states[j].bias_accum, p);
      if (op > tol || bias > tol) {
        report.converged = false;
        break;
      }
    }
  }
  return report;
}

}  // namespace convlim
