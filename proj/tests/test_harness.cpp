#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "convlim/cli.hpp"
#include "convlim/experiment.hpp"
#include "convlim/families.hpp"
#include "support/oracles.hpp"

using namespace convlim;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig config;
  config.d = 1;
  config.family.name = FamilySpec::Name::unit_center_power;
  config.family.c = 1.0;
  config.family.alpha = 2.0;
  config.checkpoints = {5, 10, 20};
  config.p = PNorm::infinity();
  config.q = 2.0;
  config.points = GridSpec{9};
  config.tolerance = 1e-6;
  return config;
}

}  // namespace

TEST_CASE("family generators") {
  FamilySpec spec;
  spec.name = FamilySpec::Name::unit_center_power;
  spec.c = 1.0;
  spec.alpha = 2.0;
  const MaskFamily fam = generate_family(spec, 3, 1);
  CHECK(fam.masks[2].coefficients == std::vector<double>{1.0, 1.0 / 9.0});
  CHECK(fam.biases[2] == std::vector<double>{1.0 / 9.0, 0.0, 0.0, 0.0});
  CHECK(fam.widths.widths == std::vector<std::size_t>{1, 2, 3, 4});

  FamilySpec constant;
  constant.name = FamilySpec::Name::constant;
  constant.mask = FilterMask{1.0, 1.0};
  const MaskFamily cfam = generate_family(constant, 5, 2);
  for (const auto& m : cfam.masks) CHECK(m.coefficients == std::vector<double>{1.0, 1.0});

  FamilySpec bad = spec;
  bad.alpha = 0.0;
  CHECK_THROWS_AS(generate_family(bad, 3, 1), std::invalid_argument);

  FamilySpec scaled;
  scaled.name = FamilySpec::Name::scaled_center;
  scaled.lambda_scale = 0.5;
  scaled.lambda_alpha = 2.0;
  scaled.tail_scale = 1.0;
  scaled.tail_alpha = 2.0;
  const MaskFamily sfam = generate_family(scaled, 4, 1);
  CHECK(sfam.masks[0].center() == doctest::Approx(0.5));   // n=1: alternating minus
  CHECK(sfam.masks[1].center() == doctest::Approx(1.125)); // n=2: plus
}

TEST_CASE("custom mask files round-trip through the family generator") {
  const fs::path path = fs::temp_directory_path() / "convlim_custom_family.json";
  const std::vector<FilterMask> masks{FilterMask{1.0, 0.25}, FilterMask{1.0, 0.0625},
                                      FilterMask{1.0, 0.015625}};
  save_mask_sequence(path, masks);
  FamilySpec spec;
  spec.name = FamilySpec::Name::custom_file;
  spec.path = path;
  const MaskFamily fam = generate_family(spec, 3, 2);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    CHECK(fam.masks[i].coefficients == masks[i].coefficients);
  }
  CHECK_THROWS_AS(generate_family(spec, 4, 2), std::invalid_argument);
  fs::remove(path);
}

TEST_CASE("family decay laws") {
  FamilySpec spec;
  spec.name = FamilySpec::Name::unit_center_power;
  spec.alpha = 2.0;
  CHECK(family_tail_decay(spec).summable());
  spec.alpha = 0.5;
  CHECK(family_tail_decay(spec).kind == DecayDeclaration::Kind::nonsummable);

  FamilySpec constant;
  constant.name = FamilySpec::Name::constant;
  constant.mask = FilterMask{1.0, 1.0};
  CHECK(family_tail_decay(constant).kind == DecayDeclaration::Kind::nonsummable);
  constant.mask = FilterMask{1.0};
  CHECK(family_tail_decay(constant).summable());
}

TEST_CASE("experiment config validation") {
  ExperimentConfig config = small_config();
  config.checkpoints = {5, 5};
  CHECK_THROWS_AS(run_depth_experiment(config), std::invalid_argument);
  config.checkpoints = {5, 4};
  CHECK_THROWS_AS(run_depth_experiment(config), std::invalid_argument);
  config = small_config();
  config.resource_cap = 10;
  CHECK_THROWS_AS(run_depth_experiment(config), std::invalid_argument);
}

TEST_CASE("experiment config files") {
  const fs::path path = fs::temp_directory_path() / "convlim_config_test.json";
  {
    std::ofstream out(path);
    out << R"({"d": 1,
               "family": {"name": "unit_center_power", "c": 1.0, "alpha": 2.0},
               "checkpoints": [5, 10],
               "p": "inf",
               "q": 2.0,
               "grid": {"points_per_axis": 7},
               "tolerance": 1e-6})";
  }
  const ExperimentConfig config = load_experiment_config(path);
  CHECK(config.d == 1);
  CHECK(config.checkpoints == std::vector<std::size_t>{5, 10});
  CHECK(std::get<GridSpec>(config.points).points_per_axis == 7);
  fs::remove(path);
  CHECK_THROWS_AS(load_experiment_config(path), std::invalid_argument);
}

TEST_CASE("depth experiments are deterministic and ordered") {
  const ExperimentConfig config = small_config();
  const std::vector<ResidualRow> rows = run_depth_experiment(config);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].depth == 5);
  CHECK(rows[2].depth == 20);
  CHECK(rows[2].grid_sup_residual == 0.0);  // reference depth
  CHECK(rows[0].grid_sup_residual > rows[1].grid_sup_residual);
  for (const auto& r : rows) {
    CHECK(r.lq_estimate <= r.grid_sup_residual * (1.0 + 1e-12));
    CHECK(r.width == 1 + r.depth);
  }
  CHECK(residual_csv(rows) == residual_csv(run_depth_experiment(config)));
  CHECK(residual_csv(rows).rfind("depth,width,grid_sup_residual,lq_estimate,operator_residual,"
                                 "bias_residual,tail_bound\n",
                                 0) == 0);
}

TEST_CASE("grid residuals stay under the declared bound chain") {
  // || N_n(x) - N_ref(x) || <= ||dA|| ||x|| + ||dc||, and with a summable
  // declared law both operator pieces are controlled by the tail bound.
  ExperimentConfig config = small_config();
  config.checkpoints = {10, 20, 40};
  const std::vector<ResidualRow> rows = run_depth_experiment(config);
  const DecayDeclaration law = family_tail_decay(config.family);
  const double bias_total = family_bias_decay(config.family).tail_after(0);
  const double sup_x = 1.0;  // grid on [0,1]
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.tail_bound_value));
    CHECK(r.grid_sup_residual <= (sup_x + bias_total) * r.tail_bound_value + 1e-12);
    CHECK(r.operator_residual <= r.tail_bound_value + 1e-12);
  }
  CHECK(law.summable());
}

TEST_CASE("thread cap does not change results") {
  const ExperimentConfig config = small_config();
  setenv("CONVLIM_THREADS", "1", 1);
  const std::string serial = residual_csv(run_depth_experiment(config));
  setenv("CONVLIM_THREADS", "4", 1);
  const std::string parallel = residual_csv(run_depth_experiment(config));
  unsetenv("CONVLIM_THREADS");
  CHECK(serial == parallel);
}

TEST_CASE("sampled points for d >= 3") {
  ExperimentConfig config = small_config();
  config.d = 3;
  config.points = SampleSpec{64, 7};
  const std::vector<std::vector<double>> pts = evaluation_points(config);
  REQUIRE(pts.size() == 64);
  for (const auto& x : pts) {
    REQUIRE(x.size() == 3);
    for (double v : x) {
      CHECK(v >= 0.0);
      CHECK(v < 1.0);
    }
  }
  CHECK(pts == evaluation_points(config));
  config.points = GridSpec{5};
  CHECK_THROWS_AS(evaluation_points(config), std::invalid_argument);
}

TEST_CASE("grid enumeration for d = 2") {
  ExperimentConfig config = small_config();
  config.d = 2;
  config.points = GridSpec{5};
  const std::vector<std::vector<double>> pts = evaluation_points(config);
  REQUIRE(pts.size() == 25);
  CHECK(pts.front() == std::vector<double>{0.0, 0.0});
  CHECK(pts.back() == std::vector<double>{1.0, 1.0});
  config.points = GridSpec{1};
  CHECK(evaluation_points(config) ==
        std::vector<std::vector<double>>{std::vector<double>{0.5, 0.5}});
}

TEST_CASE("sampled experiment for d = 3") {
  ExperimentConfig config = small_config();
  config.d = 3;
  config.points = SampleSpec{128, 9};
  config.checkpoints = {4, 8, 16};
  const std::vector<ResidualRow> rows = run_depth_experiment(config);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].grid_sup_residual > rows[1].grid_sup_residual);
  CHECK(rows[2].grid_sup_residual == 0.0);
  CHECK(residual_csv(rows) == residual_csv(run_depth_experiment(config)));
}

TEST_CASE("lq distance estimates") {
  FamilySpec spec;
  spec.name = FamilySpec::Name::unit_center_power;
  const MaskFamily fam = generate_family(spec, 20, 1);
  const NetworkSpec net = family_network(fam, 1);

  CHECK(lq_distance_estimate(net, 10, 10, 2.0, PNorm::infinity(), 100, 3) == 0.0);
  CHECK(lq_distance_estimate(net, 0, 0, 2.0, PNorm::infinity(), 100, 3) == 0.0);

  const double mean_q2 = lq_distance_estimate(net, 10, 20, 2.0, PNorm::infinity(), 500, 3);
  const double sup = lq_distance_estimate(net, 10, 20,
                                          std::numeric_limits<double>::infinity(),
                                          PNorm::infinity(), 500, 3);
  CHECK(mean_q2 <= sup * (1.0 + 1e-12));
  CHECK(sup > 0.0);
  const double mean_q1 = lq_distance_estimate(net, 10, 20, 1.0, PNorm::infinity(), 500, 3);
  CHECK(mean_q1 <= mean_q2 * (1.0 + 1e-12));  // power means are monotone in q
  CHECK(lq_distance_estimate(net, 10, 20, 2.0, PNorm::general(3.0), 100, 3) > 0.0);
  CHECK_THROWS_AS(lq_distance_estimate(net, 1, 2, 0.5, PNorm::one(), 10, 0),
                  std::invalid_argument);
}

TEST_CASE("cli dispatch") {
  CHECK(cli_dispatch({"check", "--family", "unit_center_power", "--c", "1", "--alpha", "2",
                      "--horizon", "50", "--p", "inf"}) == 0);
  CHECK(cli_dispatch({"check", "--family", "constant", "--mask", "1,1", "--horizon", "20"}) == 1);
  CHECK(cli_dispatch({"nonsense"}) == 2);
  CHECK(cli_dispatch({}) == 2);
  CHECK(cli_dispatch({"experiment", "--config", "/nonexistent/cfg.json"}) == 2);

  const fs::path cfg = fs::temp_directory_path() / "convlim_cli_cfg.json";
  const fs::path csv = fs::temp_directory_path() / "convlim_cli_out.csv";
  {
    std::ofstream out(cfg);
    out << R"({"d": 1,
               "family": {"name": "unit_center_power", "c": 1.0, "alpha": 2.0},
               "checkpoints": [4, 8],
               "grid": {"points_per_axis": 5},
               "output_csv": ")"
        << csv.string() << R"("})";
  }
  CHECK(cli_dispatch({"experiment", "--config", cfg.string()}) == 0);
  CHECK(fs::exists(csv));
  fs::remove(cfg);
  fs::remove(csv);

  CHECK(cli_dispatch({"repr-test", "--seed", "5"}) == 0);

  const fs::path report = fs::temp_directory_path() / "convlim_cli_report.json";
  CHECK(cli_dispatch({"check", "--family", "unit_center_power", "--horizon", "30",
                      "--criterion", "dnn", "--out", report.string()}) == 0);
  CHECK(fs::exists(report));
  fs::remove(report);
  CHECK(cli_dispatch({"check", "--family", "nonsense"}) == 2);
  CHECK(cli_dispatch({"check", "--criterion", "nonsense"}) == 2);
}
