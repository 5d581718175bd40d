#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convlim/conv_core.hpp"
#include "convlim/lp_linalg.hpp"
#include "convlim/relu_net.hpp"

namespace convlim {

// A finite prefix cannot witness that a series converges, so callers declare
// the tail law of the checked quantity. `power` and `geometric` declare a
// summable majorant that the prefix is checked against; `nonsummable`
// declares that the series diverges; `finite_horizon_only` declares nothing
// beyond the data.
struct DecayDeclaration {
  enum class Kind { finite_horizon_only, power, geometric, nonsummable };

  Kind kind = Kind::finite_horizon_only;
  double scale = 0.0;     // c
  double exponent = 0.0;  // alpha, power only
  double ratio = 0.0;     // r, geometric only

  static DecayDeclaration finite_horizon() { return DecayDeclaration{}; }
  static DecayDeclaration power(double c, double alpha);      // alpha > 1
  static DecayDeclaration geometric(double c, double r);      // 0 <= r < 1
  static DecayDeclaration nonsummable();

  bool summable() const { return kind == Kind::power || kind == Kind::geometric; }
  // Declared bound for the n-th term (1-based); +inf when unconstrained.
  double majorant(std::size_t n) const;
  // Upper bound on the declared tail beyond index q; +inf unless summable.
  double tail_after(std::size_t q) const;
};

enum class Verdict { satisfied, satisfied_up_to_horizon, violated, inapplicable };

std::string_view to_string(Verdict v);

// Outcome of one sufficient-condition check. `violated` states that the
// sufficient condition fails (by a witnessed finite-prefix violation or a
// declared non-summable tail); it never claims the network diverges.
struct CriterionReport {
  Verdict verdict = Verdict::inapplicable;
  std::map<std::string, double> partial_sums;
  std::map<std::string, double> tail_estimates;
  std::vector<std::string> notes;

  std::string to_json() const;  // numbers at 15 significant digits
};

// Sufficient condition for a general network with non-decreasing widths:
// W_n = I_{m_n, m_{n-1}} + P_n with summable ||P_n||_p and summable
// ||b_n||_p. Norms are exact for p in {1, inf} and interpolation upper
// bounds otherwise.
CriterionReport check_dnn_sufficient(std::span<const LayerSpec> layers, const PNorm& p,
                                     const DecayDeclaration& perturbation_decay,
                                     const DecayDeclaration& bias_decay);

// CNN condition with unit centers: every w_0 = 1 (else violated) and
// summable sum_n sum_{j>=1} |w_j^{(n)}|, which majorizes ||P_n||_p.
CriterionReport check_cnn_unit_center(std::span<const FilterMask> masks,
                                      std::span<const std::vector<double>> biases, const PNorm& p,
                                      const DecayDeclaration& tail_decay,
                                      const DecayDeclaration& bias_decay);

// General CNN condition: the scalar products prod w_0^{(n)} must converge to
// a nonzero limit (checked through lambda_n = w_0^{(n)} - 1: max |lambda| < 1
// over the horizon and declared-summable sum |lambda_n|), plus a summable
// mask ratio series sum_n (sum_{j>=1}|w_j|)/|w_0|.
CriterionReport check_cnn_general(std::span<const FilterMask> masks,
                                  std::span<const std::vector<double>> biases, const PNorm& p,
                                  const DecayDeclaration& ratio_decay,
                                  const DecayDeclaration& bias_decay,
                                  const DecayDeclaration& lambda_decay);

// Necessary-condition guideline for fixed-length masks: |w_j^{(n)}|/|w_0^{(n)}|
// should tend to 0 for every tap j. Informational only.
struct RatioTrend {
  std::size_t tap;             // j, 1-based
  std::vector<double> ratios;  // per layer
  bool below_tol;              // whole trailing window <= tol
  bool trending_to_zero;       // non-increasing over the window and halved overall
  bool consistent;             // below_tol || trending_to_zero
};

struct GuidelineReport {
  std::vector<RatioTrend> taps;
  bool all_consistent;  // vacuously true for masks of length 1
};

GuidelineReport fixed_length_guideline(std::span<const FilterMask> masks,
                                       std::size_t window = 10, double tol = 1e-6);

}  // namespace convlim
