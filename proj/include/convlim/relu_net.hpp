#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "convlim/conv_core.hpp"
#include "convlim/lp_linalg.hpp"

namespace convlim {

// One hidden layer: weight (dense or mask view) plus bias.
struct LayerSpec {
  LayerWeight weight;
  std::vector<double> bias;

  LayerSpec(LayerWeight w, std::vector<double> b);

  std::size_t input_width() const { return weight.cols(); }
  std::size_t output_width() const { return weight.rows(); }
  std::vector<double> preactivation(std::span<const double> x) const;  // W x + b
};

// A network x -> sigma(W_n . + b_n) o ... o sigma(W_1 . + b_1), given either
// as a finite layer list or as a generator producing layer n on demand.
// Layers are validated to have non-decreasing widths that chain correctly.
// Generated layers are memoized; access is internally synchronized, and
// ensure_depth() pre-expands before parallel evaluation.
class NetworkSpec {
 public:
  NetworkSpec(std::size_t input_dim, std::vector<LayerSpec> layers);
  NetworkSpec(std::size_t input_dim, std::function<LayerSpec(std::size_t)> generator);

  std::size_t input_dim() const { return input_dim_; }
  // Number of layers for finite networks; nullopt for generator networks.
  std::optional<std::size_t> finite_depth() const;
  const LayerSpec& layer(std::size_t n) const;  // n is 1-based
  void ensure_depth(std::size_t n) const;
  WidthSchedule widths(std::size_t n) const;  // m_0 .. m_n

 private:
  void append_checked(LayerSpec layer) const;

  std::size_t input_dim_;
  mutable std::deque<LayerSpec> layers_;
  std::function<LayerSpec(std::size_t)> generator_;
  mutable std::mutex mutex_;
};

// A finite vector regarded as an element of l^p by zero extension.
struct PaddedVector {
  std::vector<double> values;

  double pnorm(const PNorm& p) const { return vector_pnorm(values, p); }
};

// || pad(a) - pad(b) ||_p; exact for every p (vector norm).
double padded_diff_pnorm(const PaddedVector& a, const PaddedVector& b, const PNorm& p);

// Activation matrices (J_1, ..., J_n) recorded along a forward pass.
struct ActivationTrace {
  std::vector<ActivationMatrix> layers;

  std::size_t depth() const { return layers.size(); }
};

// x -> linear * x + offset; agrees with the network on the activation
// domain of the trace it was built from.
struct AffineForm {
  Matrix linear;
  std::vector<double> offset;

  std::vector<double> evaluate(std::span<const double> x) const;
};

std::vector<double> forward(const NetworkSpec& net, std::span<const double> x, std::size_t n);
PaddedVector padded_forward(const NetworkSpec& net, std::span<const double> x, std::size_t n);
ActivationTrace activation_trace(const NetworkSpec& net, std::span<const double> x, std::size_t n);

// The exact affine representation prod_i J_i W_i, sum_i (prod_{k>i} J_k W_k) J_i b_i
// for the first n layers of the trace.
AffineForm affine_representation(const NetworkSpec& net, const ActivationTrace& trace,
                                 std::size_t n);

// True iff the pre-activation sign pattern of x matches the trace at every
// layer k <= n (strictly positive on the support, <= 0 off it).
bool domain_membership(const NetworkSpec& net, const ActivationTrace& trace,
                       std::span<const double> x, std::size_t n);

// Network files: {"d": int, "layers": [{"mask": [...] | "dense": [[...]],
// "bias": [...]}, ...]}.
NetworkSpec load_network(const std::filesystem::path& path);
void save_network(const std::filesystem::path& path, const NetworkSpec& net, std::size_t depth);

}  // namespace convlim
