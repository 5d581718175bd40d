#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "convlim/conv_core.hpp"
#include "convlim/lp_linalg.hpp"
#include "convlim/relu_net.hpp"

namespace convlim {

// A finite matrix with d columns regarded as an operator into l^p by
// appending zero rows.
struct PaddedOperator {
  Matrix active;
};

// || pad(a) - pad(b) ||_p on the common zero extension. Exact for
// p in {1, 2, infinity}; for general p this returns the interpolation upper
// bound (see padded_distance_bounds for the enclosure).
double padded_distance(const PaddedOperator& a, const PaddedOperator& b, const PNorm& p);
NormBounds padded_distance_bounds(const PaddedOperator& a, const PaddedOperator& b,
                                  const PNorm& p);

// Running partial product prod_{i<=n} J_i W_i together with the accumulated
// bias vector c_n, extended one layer at a time.
struct ProductState {
  std::size_t depth;
  PaddedOperator current;    // m_n x d
  PaddedVector bias_accum;   // c_n, length m_n
  WidthSchedule widths;      // m_0 .. m_n
};

ProductState initial_product_state(std::size_t d);

// current' = J W current, bias' = J (W bias + b).
ProductState extend_product(const ProductState& state, const ActivationMatrix& j,
                            const LayerWeight& w, std::span<const double> b);
ProductState extend_product(const ProductState& state, const ActivationMatrix& j,
                            const Matrix& w, std::span<const double> b);

// prod_{i=k}^{n} J_i I_{m_i, m_{i-1}} collapses to I_{m_n, m_{k-1}} J' with
// supp J' the intersection of the supports restricted to the first m_{k-1}
// coordinates. last_change_layer is the largest layer index at which the
// running restricted intersection strictly shrank (0 if it never did): the
// support has stabilized over a trailing window iff last_change_layer lies
// before that window.
struct StabilizedProduct {
  ActivationMatrix support;   // J', width m_{k-1}
  Matrix product;             // I_{m_n, m_{k-1}} J'
  std::size_t last_change_layer;
};

StabilizedProduct stabilized_activation_product(const WidthSchedule& widths, std::size_t k,
                                                std::span<const ActivationMatrix> js);

// sum_{i>q} a_i plus all products of >= 2 factors whose largest index
// exceeds q, evaluated in closed form as
// prod_{i<=n} (1 + a_i) - prod_{i<=q} (1 + a_i). Entries must be >= 0 and
// n <= 20 (the quantity is a subset expansion).
double series_inequality_lhs(std::span<const double> a, std::size_t q);

// 2 (sum_{i>q} a_i) exp(sum_i a_i): dominates the p-distance between partial
// products beyond cutoff q when a_i majorizes ||P_i||_p.
struct TailEstimate {
  std::size_t cutoff;
  double tail_sum;
  double total_sum;
  double bound;
};

TailEstimate tail_bound(std::span<const double> p_norms, std::size_t q);

// Finite-window Cauchy check over states at increasing depths. `converged`
// holds iff every pairwise distance among the trailing window+1 states is
// <= tol for both the operator part and the accumulated bias. The residual
// series between consecutive states is reported for inspection; the deepest
// state is the limit proxy.
//
// `declared_majorants` optionally carries per-layer bounds a_i >= ||P_i||_p
// for every layer up to the deepest state; when given, window_tail_bound is
// the analytic bound on distances past the window start and `empirical_only`
// is false. No finite computation can certify the infinite product without
// such a declaration.
struct ConvergenceReport {
  bool converged;
  bool empirical_only;
  double window_tail_bound;  // +inf without declared majorants
  std::vector<double> operator_residuals;
  std::vector<double> bias_residuals;
  ProductState limit_proxy;
};

ConvergenceReport detect_convergence(std::span<const ProductState> states, const PNorm& p,
                                     double tol, std::size_t window,
                                     std::span<const double> declared_majorants = {});

}  // namespace convlim
