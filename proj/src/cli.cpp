#include "convlim/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "convlim/criteria.hpp"
#include "convlim/experiment.hpp"
#include "convlim/families.hpp"

namespace convlim {

namespace {

PNorm parse_pnorm(const std::string& s) {
  if (s == "1" || s == "one") return PNorm::one();
  if (s == "2" || s == "two") return PNorm::two();
  if (s == "inf" || s == "infinity") return PNorm::infinity();
  const double p = std::stod(s);
  if (p == 1.0) return PNorm::one();
  if (p == 2.0) return PNorm::two();
  return PNorm::general(p);
}

FilterMask parse_mask(const std::string& csv) {
  std::vector<double> coeffs;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) coeffs.push_back(std::stod(item));
  return FilterMask(std::move(coeffs));
}

struct CheckOptions {
  std::string family = "unit_center_power";
  double c = 1.0;
  double alpha = 2.0;
  double lambda_scale = 0.0;
  double lambda_alpha = 2.0;
  double tail_scale = 0.0;
  double tail_alpha = 2.0;
  std::string mask = "1";
  std::string file;
  std::size_t horizon = 100;
  std::size_t d = 1;
  std::string p = "inf";
  std::string criterion = "auto";
  std::string out_path;
};

FamilySpec family_from_options(const CheckOptions& opt) {
  FamilySpec spec;
  if (opt.family == "unit_center_power") {
    spec.name = FamilySpec::Name::unit_center_power;
    spec.c = opt.c;
    spec.alpha = opt.alpha;
  } else if (opt.family == "scaled_center") {
    spec.name = FamilySpec::Name::scaled_center;
    spec.lambda_scale = opt.lambda_scale;
    spec.lambda_alpha = opt.lambda_alpha;
    spec.tail_scale = opt.tail_scale;
    spec.tail_alpha = opt.tail_alpha;
  } else if (opt.family == "constant") {
    spec.name = FamilySpec::Name::constant;
    spec.mask = parse_mask(opt.mask);
  } else if (opt.family == "custom_file") {
    spec.name = FamilySpec::Name::custom_file;
    spec.path = opt.file;
  } else {
    throw std::invalid_argument("unknown family \"" + opt.family + "\"");
  }
  return spec;
}

int run_check(const CheckOptions& opt) {
  const FamilySpec spec = family_from_options(opt);
  const MaskFamily family = generate_family(spec, opt.horizon, opt.d);
  const PNorm p = parse_pnorm(opt.p);
  const DecayDeclaration tail_decay = family_tail_decay(spec);
  const DecayDeclaration bias_decay = family_bias_decay(spec);
  const DecayDeclaration lambda_decay = family_lambda_decay(spec);

  std::string criterion = opt.criterion;
  if (criterion == "auto") {
    bool unit = true;
    for (const auto& m : family.masks) unit = unit && m.center() == 1.0;
    criterion = unit ? "unit" : "general";
  }

  CriterionReport report;
  if (criterion == "unit") {
    report = check_cnn_unit_center(family.masks, family.biases, p, tail_decay, bias_decay);
  } else if (criterion == "general") {
    report = check_cnn_general(family.masks, family.biases, p, tail_decay, bias_decay,
                               lambda_decay);
  } else if (criterion == "dnn") {
    std::vector<LayerSpec> layers;
    for (std::size_t n = 0; n < family.masks.size(); ++n) {
      layers.emplace_back(LayerWeight::conv(family.masks[n], family.widths.width_at(n)),
                          family.biases[n]);
    }
    report = check_dnn_sufficient(layers, p, tail_decay, bias_decay);
  } else {
    throw std::invalid_argument("--criterion expects auto, unit, general, or dnn");
  }

  const std::string json = report.to_json();
  std::cout << json << "\n";
  if (!opt.out_path.empty()) {
    std::ofstream out(opt.out_path);
    if (!out) throw std::runtime_error("cannot write report to " + opt.out_path);
    out << json << "\n";
  }
  return report.verdict == Verdict::violated ? 1 : 0;
}

int run_experiment(const std::string& config_path) {
  const ExperimentConfig config = load_experiment_config(config_path);
  const std::vector<ResidualRow> rows = run_depth_experiment(config);
  if (config.output_csv.empty()) {
    std::cout << residual_csv(rows);
  } else {
    std::cout << "wrote " << rows.size() << " rows to " << config.output_csv.string() << "\n";
  }
  return 0;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args) {
  CLI::App app{"convergence diagnostics for deep ReLU networks with increasing widths"};
  app.require_subcommand(1);

  CheckOptions check_opt;
  CLI::App* check = app.add_subcommand("check", "run a sufficient-condition check on a family");
  check->add_option("--family", check_opt.family,
                    "unit_center_power | scaled_center | constant | custom_file");
  check->add_option("--c", check_opt.c, "scale of the unit_center_power tail");
  check->add_option("--alpha", check_opt.alpha, "exponent of the unit_center_power tail");
  check->add_option("--lambda-scale", check_opt.lambda_scale, "scaled_center lambda scale");
  check->add_option("--lambda-alpha", check_opt.lambda_alpha, "scaled_center lambda exponent");
  check->add_option("--tail-scale", check_opt.tail_scale, "scaled_center tail scale");
  check->add_option("--tail-alpha", check_opt.tail_alpha, "scaled_center tail exponent");
  check->add_option("--mask", check_opt.mask, "constant family mask, comma separated");
  check->add_option("--file", check_opt.file, "mask sequence JSON for custom_file");
  check->add_option("--horizon", check_opt.horizon, "number of layers to examine");
  check->add_option("--d", check_opt.d, "input dimension");
  check->add_option("--p", check_opt.p, "norm: one, two, inf, or a number >= 1");
  check->add_option("--criterion", check_opt.criterion, "auto | unit | general | dnn");
  check->add_option("--out", check_opt.out_path, "also write the JSON report here");

  std::string config_path;
  CLI::App* experiment = app.add_subcommand("experiment", "run a depth-growth experiment");
  experiment->add_option("--config", config_path, "experiment config JSON")->required();

  std::uint64_t verify_seed = 1;
  CLI::App* verify = app.add_subcommand("verify", "run the self-check property suites");
  verify->add_option("--seed", verify_seed, "RNG seed for the suites");

  std::uint64_t repr_seed = 1;
  double repr_tol = 1e-9;
  CLI::App* repr = app.add_subcommand("repr-test",
                                      "check the affine representation of one random net");
  repr->add_option("--seed", repr_seed, "RNG seed for the net");
  repr->add_option("--tol", repr_tol, "pass threshold on the max error");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("convlim");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (check->parsed()) return run_check(check_opt);
    if (experiment->parsed()) return run_experiment(config_path);
    if (verify->parsed()) return run_verification_suites(std::cout, verify_seed) ? 0 : 1;
    if (repr->parsed()) return representation_spot_check(std::cout, repr_seed) <= repr_tol ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace convlim
