#include "convlim/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace convlim {

DecayDeclaration DecayDeclaration::power(double c, double alpha) {
  if (!(c >= 0.0)) throw std::invalid_argument("DecayDeclaration::power: c must be >= 0");
  if (!(alpha > 1.0)) {
    throw std::invalid_argument("DecayDeclaration::power: alpha must exceed 1 for summability");
  }
  DecayDeclaration d;
  d.kind = Kind::power;
  d.scale = c;
  d.exponent = alpha;
  return d;
}

DecayDeclaration DecayDeclaration::geometric(double c, double r) {
  if (!(c >= 0.0)) throw std::invalid_argument("DecayDeclaration::geometric: c must be >= 0");
  if (!(r >= 0.0 && r < 1.0)) {
    throw std::invalid_argument("DecayDeclaration::geometric: requires 0 <= r < 1");
  }
  DecayDeclaration d;
  d.kind = Kind::geometric;
  d.scale = c;
  d.ratio = r;
  return d;
}

DecayDeclaration DecayDeclaration::nonsummable() {
  DecayDeclaration d;
  d.kind = Kind::nonsummable;
  return d;
}

double DecayDeclaration::majorant(std::size_t n) const {
  switch (kind) {
    case Kind::power:
      return scale / std::pow(double(n), exponent);
    case Kind::geometric:
      return scale * std::pow(ratio, double(n));
    default:
      return std::numeric_limits<double>::infinity();
  }
}

double DecayDeclaration::tail_after(std::size_t q) const {
  switch (kind) {
    case Kind::power:
      // Integral bound on sum_{n>q} c n^{-alpha}.
      if (q == 0) return scale * exponent / (exponent - 1.0);
      return scale * std::pow(double(q), 1.0 - exponent) / (exponent - 1.0);
    case Kind::geometric:
      if (ratio == 0.0) return 0.0;
      return scale * std::pow(ratio, double(q) + 1.0) / (1.0 - ratio);
    default:
      return std::numeric_limits<double>::infinity();
  }
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::satisfied: return "satisfied";
    case Verdict::satisfied_up_to_horizon: return "satisfied_up_to_horizon";
    case Verdict::violated: return "violated";
    case Verdict::inapplicable: return "inapplicable";
  }
  return "inapplicable";
}

namespace {

double round_to_15_digits(double v) {
  if (!std::isfinite(v)) return v;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return std::strtod(buf, nullptr);
}

struct SeriesCheck {
  std::string name;
  DecayDeclaration declaration;
  double partial_sum = 0.0;
  bool consistent = true;
  std::size_t first_violation = 0;  // 1-based layer, 0 if none
  std::size_t horizon = 0;
};

SeriesCheck check_series(std::string name, std::span<const double> terms,
                         const DecayDeclaration& decl) {
  SeriesCheck out{std::move(name), decl};
  out.horizon = terms.size();
  for (std::size_t i = 0; i < terms.size(); ++i) {
    out.partial_sum += terms[i];
    const double cap = decl.majorant(i + 1);
    if (std::isfinite(cap) && terms[i] > cap * (1.0 + 1e-9) + 1e-12 && out.consistent) {
      out.consistent = false;
      out.first_violation = i + 1;
    }
  }
  return out;
}

// Shared verdict logic: every series must carry a summable declaration the
// prefix is consistent with; a declared non-summable tail defeats the
// sufficient condition outright.
Verdict combine_series(std::span<const SeriesCheck> checks, CriterionReport& report) {
  bool all_summable_consistent = true;
  bool any_nonsummable = false;
  for (const auto& c : checks) {
    report.partial_sums[c.name + "_sum"] = c.partial_sum;
    if (c.declaration.summable()) {
      report.tail_estimates[c.name + "_tail"] = c.declaration.tail_after(c.horizon);
      if (!c.consistent) {
        all_summable_consistent = false;
        report.notes.push_back(c.name + ": declared majorant violated at layer " +
                               std::to_string(c.first_violation) +
                               "; declaration inconsistent with the data");
      }
    } else if (c.declaration.kind == DecayDeclaration::Kind::nonsummable) {
      any_nonsummable = true;
      report.notes.push_back(c.name +
                             ": declared non-summable tail; the sufficient condition's series "
                             "diverges under the declaration (no divergence of the network is "
                             "implied)");
    } else {
      all_summable_consistent = false;
      report.notes.push_back(c.name +
                             ": no tail law declared; summability cannot be certified from a "
                             "finite prefix");
    }
  }
  if (any_nonsummable) return Verdict::violated;
  return all_summable_consistent ? Verdict::satisfied : Verdict::satisfied_up_to_horizon;
}

// ||W - I_{m',m}||_p for p in {1, inf} without materializing conv weights.
double perturbation_norm_exact(const LayerWeight& w, bool infinity_norm) {
  if (const FilterMask* mask = w.mask()) {
    const std::size_t m = w.cols();
    const std::size_t s = mask->tail_size();
    const auto& c = mask->coefficients;
    const double head = std::abs(c[0] - 1.0);
    if (!infinity_norm) {
      // Every column carries the centered head plus the full tail.
      double tail = 0.0;
      for (std::size_t j = 1; j <= s; ++j) tail += std::abs(c[j]);
      return head + tail;
    }
    double best = 0.0;
    for (std::size_t i = 0; i < m + s; ++i) {
      const std::size_t j_lo = i >= m ? i - m + 1 : 0;
      const std::size_t j_hi = std::min(i, s);
      double sum = 0.0;
      for (std::size_t j = j_lo; j <= j_hi; ++j) {
        sum += (j == 0 && i < m) ? head : std::abs(c[j]);
      }
      best = std::max(best, sum);
    }
    return best;
  }
  const Matrix& dense = *w.dense_matrix();
  Matrix p = dense;
  for (std::size_t j = 0; j < p.cols(); ++j) p(j, j) -= 1.0;
  return induced_norm_exact(p, infinity_norm ? PNorm::infinity() : PNorm::one());
}

// Exact for p in {1, inf}; interpolation upper bound otherwise.
double perturbation_norm(const LayerWeight& w, const PNorm& p) {
  switch (p.kind()) {
    case PNorm::Kind::one:
      return perturbation_norm_exact(w, false);
    case PNorm::Kind::infinity:
      return perturbation_norm_exact(w, true);
    default: {
      const double n1 = perturbation_norm_exact(w, false);
      const double ninf = perturbation_norm_exact(w, true);
      const double inv_p = p.kind() == PNorm::Kind::two ? 0.5 : 1.0 / p.exponent();
      if (n1 == 0.0 && ninf == 0.0) return 0.0;
      return std::pow(n1, inv_p) * std::pow(ninf, 1.0 - inv_p);
    }
  }
}

void note_inexact_norms(const PNorm& p, CriterionReport& report) {
  if (!p.is_exact_kind() || p.kind() == PNorm::Kind::two) {
    report.notes.push_back(
        "perturbation norms are interpolation upper bounds for p outside {1, inf}");
  }
}

std::vector<double> bias_norms(std::span<const std::vector<double>> biases, const PNorm& p) {
  std::vector<double> out;
  out.reserve(biases.size());
  for (const auto& b : biases) out.push_back(vector_pnorm(b, p));
  return out;
}

// max over 1 <= i <= n <= N of prod_{j=i}^{n} |w_0^{(j)}|, via log prefix scan.
double max_window_center_product(std::span<const FilterMask> masks) {
  double best_log = -std::numeric_limits<double>::infinity();
  double prefix = 0.0;
  double min_prefix = 0.0;  // log prod over an empty head
  for (const auto& m : masks) {
    prefix += std::log(std::abs(m.center()));
    best_log = std::max(best_log, prefix - min_prefix);
    min_prefix = std::min(min_prefix, prefix);
  }
  return std::exp(best_log);
}

void validate_cnn_input(std::span<const FilterMask> masks,
                        std::span<const std::vector<double>> biases) {
  if (masks.empty()) throw std::invalid_argument("criteria: mask sequence is empty");
  if (masks.size() != biases.size()) {
    throw std::invalid_argument("criteria: need one bias vector per mask");
  }
  if (biases.front().size() <= masks.front().tail_size()) {
    throw std::invalid_argument("criteria: first bias shorter than the first mask tail");
  }
  for (std::size_t n = 1; n < masks.size(); ++n) {
    if (biases[n].size() != biases[n - 1].size() + masks[n].tail_size()) {
      throw std::invalid_argument("criteria: bias widths do not follow the width recursion");
    }
  }
}

}  // namespace

std::string CriterionReport::to_json() const {
  nlohmann::ordered_json j;
  j["verdict"] = std::string(to_string(verdict));
  nlohmann::ordered_json sums = nlohmann::ordered_json::object();
  for (const auto& [k, v] : partial_sums) sums[k] = round_to_15_digits(v);
  j["partial_sums"] = std::move(sums);
  nlohmann::ordered_json tails = nlohmann::ordered_json::object();
  for (const auto& [k, v] : tail_estimates) tails[k] = round_to_15_digits(v);
  j["tail_estimates"] = std::move(tails);
  j["notes"] = notes;
  return j.dump(2);
}

CriterionReport check_dnn_sufficient(std::span<const LayerSpec> layers, const PNorm& p,
                                     const DecayDeclaration& perturbation_decay,
                                     const DecayDeclaration& bias_decay) {
  CriterionReport report;
  std::size_t prev_width = layers.empty() ? 0 : layers.front().input_width();
  std::vector<double> p_terms, b_terms;
  for (const auto& layer : layers) {
    if (layer.input_width() != prev_width) {
      throw std::invalid_argument("check_dnn_sufficient: layer widths do not chain");
    }
    if (layer.output_width() < layer.input_width()) {
      throw std::invalid_argument("check_dnn_sufficient: widths must be non-decreasing");
    }
    prev_width = layer.output_width();
    p_terms.push_back(perturbation_norm(layer.weight, p));
    b_terms.push_back(vector_pnorm(layer.bias, p));
  }
  note_inexact_norms(p, report);
  const SeriesCheck checks[] = {
      check_series("perturbation_norm", p_terms, perturbation_decay),
      check_series("bias_norm", b_terms, bias_decay),
  };
  report.verdict = combine_series(checks, report);
  double tail = perturbation_decay.summable() ? perturbation_decay.tail_after(p_terms.size()) : 0.0;
  report.partial_sums["uniform_product_bound"] =
      std::exp(checks[0].partial_sum + tail);
  return report;
}

CriterionReport check_cnn_unit_center(std::span<const FilterMask> masks,
                                      std::span<const std::vector<double>> biases, const PNorm& p,
                                      const DecayDeclaration& tail_decay,
                                      const DecayDeclaration& bias_decay) {
  validate_cnn_input(masks, biases);
  CriterionReport report;
  for (std::size_t n = 0; n < masks.size(); ++n) {
    if (masks[n].center() != 1.0) {
      report.verdict = Verdict::violated;
      report.notes.push_back("w_0 != 1 at layer " + std::to_string(n + 1) +
                             "; the unit-center condition does not apply (try the general "
                             "CNN check)");
      return report;
    }
  }
  std::vector<double> tail_terms;
  for (const auto& m : masks) tail_terms.push_back(mask_ratio_sum_term(m));
  const SeriesCheck checks[] = {
      check_series("perturbation_bound", tail_terms, tail_decay),
      check_series("bias_norm", bias_norms(biases, p), bias_decay),
  };
  report.verdict = combine_series(checks, report);
  double tail = tail_decay.summable() ? tail_decay.tail_after(masks.size()) : 0.0;
  report.partial_sums["uniform_product_bound"] = std::exp(checks[0].partial_sum + tail);
  return report;
}

CriterionReport check_cnn_general(std::span<const FilterMask> masks,
                                  std::span<const std::vector<double>> biases, const PNorm& p,
                                  const DecayDeclaration& ratio_decay,
                                  const DecayDeclaration& bias_decay,
                                  const DecayDeclaration& lambda_decay) {
  validate_cnn_input(masks, biases);
  CriterionReport report;
  double max_lambda = 0.0;
  std::vector<double> lambda_terms;
  for (std::size_t n = 0; n < masks.size(); ++n) {
    if (masks[n].center() == 0.0) {
      report.verdict = Verdict::violated;
      report.notes.push_back("w_0 = 0 at layer " + std::to_string(n + 1) +
                             "; the scalar product cannot converge to a nonzero limit");
      return report;
    }
    const double lambda = masks[n].center() - 1.0;
    lambda_terms.push_back(std::abs(lambda));
    max_lambda = std::max(max_lambda, std::abs(lambda));
  }
  report.partial_sums["max_abs_lambda"] = max_lambda;
  if (max_lambda >= 1.0) {
    report.verdict = Verdict::violated;
    report.notes.push_back(
        "scalar product test fails: |lambda_n| >= 1 witnessed; delta < 1 is required");
    return report;
  }
  std::vector<double> ratio_terms;
  for (const auto& m : masks) ratio_terms.push_back(mask_ratio_sum_term(m));
  const SeriesCheck checks[] = {
      check_series("mask_ratio", ratio_terms, ratio_decay),
      check_series("bias_norm", bias_norms(biases, p), bias_decay),
      check_series("lambda_abs", lambda_terms, lambda_decay),
  };
  report.verdict = combine_series(checks, report);
  double tail = ratio_decay.summable() ? ratio_decay.tail_after(masks.size()) : 0.0;
  report.partial_sums["uniform_product_bound"] =
      std::exp(checks[0].partial_sum + tail) * max_window_center_product(masks);
  return report;
}

GuidelineReport fixed_length_guideline(std::span<const FilterMask> masks, std::size_t window,
                                       double tol) {
  if (masks.empty()) throw std::invalid_argument("fixed_length_guideline: empty mask sequence");
  const std::size_t s = masks.front().tail_size();
  for (const auto& m : masks) {
    if (m.tail_size() != s) {
      throw std::invalid_argument("fixed_length_guideline: masks must share one length");
    }
    if (m.center() == 0.0) {
      throw zero_center_error("fixed_length_guideline: center coefficient w_0 is zero");
    }
  }
  GuidelineReport report;
  report.all_consistent = true;
  const std::size_t win = std::min(window, masks.size());
  for (std::size_t j = 1; j <= s; ++j) {
    RatioTrend trend;
    trend.tap = j;
    for (const auto& m : masks) {
      trend.ratios.push_back(std::abs(m.coefficients[j]) / std::abs(m.center()));
    }
    const std::size_t first_in_window = trend.ratios.size() - win;
    trend.below_tol = true;
    trend.trending_to_zero = true;
    for (std::size_t i = first_in_window; i < trend.ratios.size(); ++i) {
      if (trend.ratios[i] > tol) trend.below_tol = false;
      if (i > first_in_window && trend.ratios[i] > trend.ratios[i - 1] * (1.0 + 1e-12)) {
        trend.trending_to_zero = false;
      }
    }
    if (!(trend.ratios.back() <= 0.5 * trend.ratios.front())) trend.trending_to_zero = false;
    trend.consistent = trend.below_tol || trend.trending_to_zero;
    report.all_consistent = report.all_consistent && trend.consistent;
    report.taps.push_back(std::move(trend));
  }
  return report;
}

}  // namespace convlim
