#include "convlim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "convlim/product_limits.hpp"
#include "convlim/rng.hpp"

namespace convlim {

namespace detail {

namespace {

std::size_t thread_cap() {
  std::size_t cap = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CONVLIM_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && v >= 1) cap = std::min<std::size_t>(cap, v);
  }
  return cap;
}

}  // namespace

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min(thread_cap(), std::max<std::size_t>(count, 1));
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = count * w / workers;
    const std::size_t hi = count * (w + 1) / workers;
    pool.emplace_back([&, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

namespace {

PNorm pnorm_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "1" || s == "one") return PNorm::one();
    if (s == "2" || s == "two") return PNorm::two();
    if (s == "inf" || s == "infinity") return PNorm::infinity();
    throw std::invalid_argument("config: unknown p \"" + s + "\"");
  }
  const double p = j.get<double>();
  if (p == 1.0) return PNorm::one();
  if (p == 2.0) return PNorm::two();
  return PNorm::general(p);
}

FamilySpec family_from_json(const nlohmann::json& j) {
  FamilySpec spec;
  const std::string name = j.at("name").get<std::string>();
  if (name == "unit_center_power") {
    spec.name = FamilySpec::Name::unit_center_power;
    spec.c = j.value("c", 1.0);
    spec.alpha = j.value("alpha", 2.0);
  } else if (name == "scaled_center") {
    spec.name = FamilySpec::Name::scaled_center;
    spec.lambda_scale = j.value("lambda_scale", 0.0);
    spec.lambda_alpha = j.value("lambda_alpha", 2.0);
    spec.lambda_alternating = j.value("lambda_alternating", true);
    spec.tail_scale = j.value("tail_scale", 0.0);
    spec.tail_alpha = j.value("tail_alpha", 2.0);
  } else if (name == "constant") {
    spec.name = FamilySpec::Name::constant;
    spec.mask = FilterMask(j.at("mask").get<std::vector<double>>());
  } else if (name == "custom_file") {
    spec.name = FamilySpec::Name::custom_file;
    spec.path = j.at("path").get<std::string>();
  } else {
    throw std::invalid_argument("config: unknown family \"" + name + "\"");
  }
  return spec;
}

DecayDeclaration decay_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "power") return DecayDeclaration::power(j.at("c").get<double>(), j.at("alpha").get<double>());
  if (kind == "geometric") {
    return DecayDeclaration::geometric(j.at("c").get<double>(), j.at("r").get<double>());
  }
  if (kind == "nonsummable") return DecayDeclaration::nonsummable();
  if (kind == "finite_horizon_only") return DecayDeclaration::finite_horizon();
  throw std::invalid_argument("config: unknown decay kind \"" + kind + "\"");
}

void validate_config(const ExperimentConfig& config) {
  if (config.d == 0) throw std::invalid_argument("config: d must be >= 1");
  if (config.checkpoints.empty()) throw std::invalid_argument("config: no checkpoints");
  for (std::size_t i = 0; i < config.checkpoints.size(); ++i) {
    if (config.checkpoints[i] == 0) {
      throw std::invalid_argument("config: checkpoints must be >= 1");
    }
    if (i > 0 && config.checkpoints[i] <= config.checkpoints[i - 1]) {
      throw std::invalid_argument("config: checkpoints must be strictly increasing");
    }
  }
  if (!(config.tolerance > 0.0)) throw std::invalid_argument("config: tolerance must be > 0");
  if (!(config.q >= 1.0)) throw std::invalid_argument("config: q must be >= 1");
  if (const auto* grid = std::get_if<GridSpec>(&config.points)) {
    if (grid->points_per_axis == 0) {
      throw std::invalid_argument("config: grid resolution must be >= 1");
    }
  } else if (std::get<SampleSpec>(config.points).count == 0) {
    throw std::invalid_argument("config: sample count must be >= 1");
  }
}

// One forward pass, copying the padded output at each checkpoint depth.
std::vector<PaddedVector> forward_snapshots(const NetworkSpec& net, std::span<const double> x,
                                            std::span<const std::size_t> checkpoints) {
  std::vector<PaddedVector> snaps;
  snaps.reserve(checkpoints.size());
  std::vector<double> cur(x.begin(), x.end());
  std::size_t next = 0;
  for (std::size_t k = 1; k <= checkpoints.back() && next < checkpoints.size(); ++k) {
    cur = relu(net.layer(k).preactivation(cur));
    while (next < checkpoints.size() && checkpoints[next] == k) {
      snaps.push_back(PaddedVector{cur});
      ++next;
    }
  }
  return snaps;
}

double declared_tail_bound(const DecayDeclaration& decl, std::size_t cutoff,
                           std::size_t horizon) {
  if (!decl.summable()) return std::numeric_limits<double>::infinity();
  double partial = 0.0;
  for (std::size_t n = 1; n <= horizon; ++n) partial += decl.majorant(n);
  const double total = partial + decl.tail_after(horizon);
  return 2.0 * decl.tail_after(cutoff) * std::exp(total);
}

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path.string());
  nlohmann::json j;
  in >> j;
  ExperimentConfig config;
  config.d = j.at("d").get<std::size_t>();
  config.family = family_from_json(j.at("family"));
  config.checkpoints = j.at("checkpoints").get<std::vector<std::size_t>>();
  if (j.contains("p")) config.p = pnorm_from_json(j.at("p"));
  if (j.contains("q")) {
    if (j.at("q").is_string()) {
      if (j.at("q").get<std::string>() != "inf") {
        throw std::invalid_argument("config: q must be a number or \"inf\"");
      }
      config.q = std::numeric_limits<double>::infinity();
    } else {
      config.q = j.at("q").get<double>();
    }
  }
  if (j.contains("grid")) {
    config.points = GridSpec{j.at("grid").at("points_per_axis").get<std::size_t>()};
  } else if (j.contains("samples")) {
    config.points = SampleSpec{j.at("samples").at("count").get<std::size_t>(),
                               j.at("samples").value("seed", std::uint64_t(0))};
  } else if (config.d > 2) {
    config.points = SampleSpec{};
  }
  if (j.contains("tolerance")) config.tolerance = j.at("tolerance").get<double>();
  if (j.contains("output_csv")) config.output_csv = j.at("output_csv").get<std::string>();
  if (j.contains("decay")) config.declared_decay = decay_from_json(j.at("decay"));
  if (j.contains("resource_cap")) config.resource_cap = j.at("resource_cap").get<std::size_t>();
  validate_config(config);
  return config;
}

std::vector<std::vector<double>> evaluation_points(const ExperimentConfig& config) {
  std::vector<std::vector<double>> points;
  if (const auto* grid = std::get_if<GridSpec>(&config.points)) {
    if (config.d > 2) {
      throw std::invalid_argument("config: grids are for d <= 2; use samples");
    }
    const std::size_t r = grid->points_per_axis;
    std::vector<double> axis(r);
    for (std::size_t i = 0; i < r; ++i) {
      axis[i] = r == 1 ? 0.5 : double(i) / double(r - 1);
    }
    if (config.d == 1) {
      for (double v : axis) points.push_back({v});
    } else {
      for (double a : axis)
        for (double b : axis) points.push_back({a, b});
    }
    return points;
  }
  const auto& samples = std::get<SampleSpec>(config.points);
  points.reserve(samples.count);
  for (std::size_t i = 0; i < samples.count; ++i) {
    std::mt19937_64 rng = stream_rng(samples.seed, i);
    std::vector<double> x(config.d);
    for (double& v : x) v = uniform01(rng);
    points.push_back(std::move(x));
  }
  return points;
}

std::vector<ResidualRow> run_depth_experiment(const ExperimentConfig& config) {
  validate_config(config);
  const std::size_t n_ref = config.checkpoints.back();
  MaskFamily family = generate_family(config.family, n_ref, config.d);
  if (family.widths.width_at(n_ref) * n_ref > config.resource_cap) {
    throw std::invalid_argument("config: width * depth exceeds the resource cap");
  }
  NetworkSpec net = family_network(family, config.d);

  const std::vector<std::vector<double>> points = evaluation_points(config);
  const std::size_t k = config.checkpoints.size();

  // residuals[i] holds ||N_n(x_i) - N_ref(x_i)||_p per checkpoint.
  std::vector<std::vector<double>> residuals(points.size());
  detail::parallel_for(points.size(), [&](std::size_t i) {
    std::vector<PaddedVector> snaps = forward_snapshots(net, points[i], config.checkpoints);
    std::vector<double> r(k);
    for (std::size_t c = 0; c < k; ++c) {
      r[c] = padded_diff_pnorm(snaps[c], snaps.back(), config.p);
    }
    residuals[i] = std::move(r);
  });

  // Trace-free full-support product states at the checkpoints.
  std::vector<ProductState> states;
  states.reserve(k);
  {
    ProductState state = initial_product_state(config.d);
    std::size_t next = 0;
    for (std::size_t n = 1; n <= n_ref; ++n) {
      const LayerSpec& layer = net.layer(n);
      state = extend_product(state, ActivationMatrix::full(layer.output_width()), layer.weight,
                             layer.bias);
      if (next < k && config.checkpoints[next] == n) {
        states.push_back(state);
        ++next;
      }
    }
  }

  const DecayDeclaration decay =
      config.declared_decay ? *config.declared_decay : family_tail_decay(config.family);

  std::vector<ResidualRow> rows;
  rows.reserve(k);
  const bool q_finite = std::isfinite(config.q);
  for (std::size_t c = 0; c < k; ++c) {
    ResidualRow row{};
    row.depth = config.checkpoints[c];
    row.width = family.widths.width_at(row.depth);
    double sup = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double r = residuals[i][c];
      sup = std::max(sup, r);
      if (q_finite) acc += std::pow(r, config.q);
    }
    row.grid_sup_residual = sup;
    row.lq_estimate = q_finite ? std::pow(acc / double(points.size()), 1.0 / config.q) : sup;
    row.operator_residual = padded_distance(states[c].current, states.back().current, config.p);
    row.bias_residual = padded_diff_pnorm(states[c].bias_accum, states.back().bias_accum, config.p);
    row.tail_bound_value = declared_tail_bound(decay, row.depth, n_ref);
    rows.push_back(row);
  }

  if (!config.output_csv.empty()) {
    std::ofstream out(config.output_csv);
    if (!out) {
      throw std::runtime_error("cannot write CSV: " + config.output_csv.string());
    }
    out << residual_csv(rows);
  }
  return rows;
}

std::string residual_csv(std::span<const ResidualRow> rows) {
  std::string csv =
      "depth,width,grid_sup_residual,lq_estimate,operator_residual,bias_residual,tail_bound\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%.15g,%.15g,%.15g,%.15g,%.15g\n", r.depth, r.width,
                  r.grid_sup_residual, r.lq_estimate, r.operator_residual, r.bias_residual,
                  r.tail_bound_value);
    csv += buf;
  }
  return csv;
}

double lq_distance_estimate(const NetworkSpec& net, std::size_t n, std::size_t n2, double q,
                            const PNorm& p, std::size_t samples, std::uint64_t seed) {
  if (!(q >= 1.0)) throw std::invalid_argument("lq_distance_estimate: q must be >= 1");
  if (samples == 0) throw std::invalid_argument("lq_distance_estimate: samples must be >= 1");
  const std::size_t checkpoints[] = {std::min(n, n2), std::max(n, n2)};
  std::vector<double> dist(samples, 0.0);
  detail::parallel_for(samples, [&](std::size_t i) {
    std::mt19937_64 rng = stream_rng(seed, i);
    std::vector<double> x(net.input_dim());
    for (double& v : x) v = uniform01(rng);
    if (checkpoints[0] == checkpoints[1]) {
      dist[i] = 0.0;
      return;
    }
    std::vector<PaddedVector> snaps;
    if (checkpoints[0] == 0) {
      snaps.push_back(PaddedVector{x});
      std::vector<PaddedVector> deep =
          forward_snapshots(net, x, std::span<const std::size_t>(checkpoints + 1, 1));
      snaps.push_back(std::move(deep.front()));
    } else {
      snaps = forward_snapshots(net, x, checkpoints);
    }
    dist[i] = padded_diff_pnorm(snaps.front(), snaps.back(), p);
  });
  if (!std::isfinite(q)) {
    double sup = 0.0;
    for (double v : dist) sup = std::max(sup, v);
    return sup;
  }
  double acc = 0.0;
  for (double v : dist) acc += std::pow(v, q);
  return std::pow(acc / double(samples), 1.0 / q);
}

}  // namespace convlim
