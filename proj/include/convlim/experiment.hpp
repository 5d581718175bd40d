#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "convlim/criteria.hpp"
#include "convlim/families.hpp"
#include "convlim/lp_linalg.hpp"
#include "convlim/relu_net.hpp"

namespace convlim {

struct GridSpec {
  std::size_t points_per_axis = 33;
};

struct SampleSpec {
  std::size_t count = 4096;
  std::uint64_t seed = 0;
};

// Depth-growth experiment: evaluate the padded network at the checkpoint
// depths against the deepest checkpoint and record residuals. Inputs come
// from a uniform grid on [0,1]^d (d <= 2) or seeded uniform samples (d >= 3).
struct ExperimentConfig {
  std::size_t d = 1;
  FamilySpec family;
  std::vector<std::size_t> checkpoints;
  PNorm p = PNorm::infinity();
  double q = 2.0;  // exponent of the L^q(l^p) estimate; may be infinity
  std::variant<GridSpec, SampleSpec> points = GridSpec{};
  double tolerance = 1e-6;
  std::filesystem::path output_csv;
  std::optional<DecayDeclaration> declared_decay;  // defaults to the family's law
  std::size_t resource_cap = 10'000'000;           // max width * depth
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct ResidualRow {
  std::size_t depth;
  std::size_t width;
  double grid_sup_residual;
  double lq_estimate;
  double operator_residual;
  double bias_residual;
  double tail_bound_value;
};

// Runs the experiment, writes the CSV when an output path is configured, and
// returns the rows (sorted by depth). Deterministic for a fixed config.
std::vector<ResidualRow> run_depth_experiment(const ExperimentConfig& config);

// Fixed schema: header line plus one row per checkpoint, 15 significant
// digits, newline-terminated.
std::string residual_csv(std::span<const ResidualRow> rows);

// Monte-Carlo estimate of the L^q(l^p) distance between depths n and n2 on
// uniform samples from [0,1]^d; for q = infinity, the sample maximum.
double lq_distance_estimate(const NetworkSpec& net, std::size_t n, std::size_t n2, double q,
                            const PNorm& p, std::size_t samples, std::uint64_t seed);

// The evaluation points the config describes (grid or samples), in order.
std::vector<std::vector<double>> evaluation_points(const ExperimentConfig& config);

namespace detail {

// Chunked parallel loop; the worker count honors CONVLIM_THREADS. Results
// must be written by index so the reduction order stays fixed.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace detail

}  // namespace convlim
