#include "convlim/families.hpp"

#include <cmath>
#include <stdexcept>

namespace convlim {

namespace {

void require_positive_exponents(const FamilySpec& spec) {
  switch (spec.name) {
    case FamilySpec::Name::unit_center_power:
      if (!(spec.alpha > 0.0)) {
        throw std::invalid_argument("unit_center_power: alpha must be > 0");
      }
      break;
    case FamilySpec::Name::scaled_center:
      if (!(spec.lambda_alpha > 0.0) || !(spec.tail_alpha > 0.0)) {
        throw std::invalid_argument("scaled_center: exponents must be > 0");
      }
      break;
    default:
      break;
  }
}

FilterMask family_mask(const FamilySpec& spec, std::size_t n) {
  switch (spec.name) {
    case FamilySpec::Name::unit_center_power:
      return FilterMask{1.0, spec.c / std::pow(double(n), spec.alpha)};
    case FamilySpec::Name::scaled_center: {
      double lambda = spec.lambda_scale / std::pow(double(n), spec.lambda_alpha);
      if (spec.lambda_alternating && (n % 2 == 1)) lambda = -lambda;
      return FilterMask{1.0 + lambda, spec.tail_scale / std::pow(double(n), spec.tail_alpha)};
    }
    case FamilySpec::Name::constant:
      return spec.mask;
    case FamilySpec::Name::custom_file:
      break;
  }
  throw std::invalid_argument("generate_family: unknown family");
}

}  // namespace

MaskFamily generate_family(const FamilySpec& spec, std::size_t horizon, std::size_t d) {
  if (horizon == 0) throw std::invalid_argument("generate_family: horizon must be >= 1");
  if (d == 0) throw std::invalid_argument("generate_family: d must be >= 1");
  require_positive_exponents(spec);

  std::vector<FilterMask> masks;
  masks.reserve(horizon);
  if (spec.name == FamilySpec::Name::custom_file) {
    masks = load_mask_sequence(spec.path);
    if (masks.size() < horizon) {
      throw std::invalid_argument("generate_family: mask file shorter than the horizon");
    }
    masks.resize(horizon, FilterMask{1.0});
  } else {
    for (std::size_t n = 1; n <= horizon; ++n) masks.push_back(family_mask(spec, n));
  }

  std::vector<std::size_t> tails;
  tails.reserve(horizon);
  for (const auto& m : masks) tails.push_back(m.tail_size());
  WidthSchedule widths = cnn_widths(d, tails);

  std::vector<std::vector<double>> biases;
  biases.reserve(horizon);
  for (std::size_t n = 1; n <= horizon; ++n) {
    std::vector<double> b(widths.width_at(n), 0.0);
    if (spec.name == FamilySpec::Name::unit_center_power) {
      b[0] = spec.c / std::pow(double(n), spec.alpha);
    }
    biases.push_back(std::move(b));
  }
  return MaskFamily{std::move(masks), std::move(biases), std::move(widths)};
}

NetworkSpec family_network(const MaskFamily& family, std::size_t d) {
  std::vector<LayerSpec> layers;
  layers.reserve(family.masks.size());
  for (std::size_t n = 0; n < family.masks.size(); ++n) {
    layers.emplace_back(LayerWeight::conv(family.masks[n], family.widths.width_at(n)),
                        family.biases[n]);
  }
  return NetworkSpec(d, std::move(layers));
}

DecayDeclaration family_tail_decay(const FamilySpec& spec) {
  switch (spec.name) {
    case FamilySpec::Name::unit_center_power:
      if (spec.c == 0.0) return DecayDeclaration::geometric(0.0, 0.0);
      return spec.alpha > 1.0 ? DecayDeclaration::power(spec.c, spec.alpha)
                              : DecayDeclaration::nonsummable();
    case FamilySpec::Name::scaled_center: {
      if (spec.tail_scale == 0.0) return DecayDeclaration::geometric(0.0, 0.0);
      // The ratio term divides by |1 + lambda_n| >= 1 - |lambda_1|.
      const double floor = 1.0 - std::abs(spec.lambda_scale);
      if (spec.tail_alpha > 1.0 && floor > 0.0) {
        return DecayDeclaration::power(spec.tail_scale / floor, spec.tail_alpha);
      }
      return spec.tail_alpha > 1.0 ? DecayDeclaration::finite_horizon()
                                   : DecayDeclaration::nonsummable();
    }
    case FamilySpec::Name::constant: {
      double tail = 0.0;
      for (std::size_t j = 1; j < spec.mask.coefficients.size(); ++j) {
        tail += std::abs(spec.mask.coefficients[j]);
      }
      return tail == 0.0 ? DecayDeclaration::geometric(0.0, 0.0)
                         : DecayDeclaration::nonsummable();
    }
    case FamilySpec::Name::custom_file:
      return DecayDeclaration::finite_horizon();
  }
  return DecayDeclaration::finite_horizon();
}

DecayDeclaration family_bias_decay(const FamilySpec& spec) {
  if (spec.name == FamilySpec::Name::unit_center_power) {
    if (spec.c == 0.0) return DecayDeclaration::geometric(0.0, 0.0);
    return spec.alpha > 1.0 ? DecayDeclaration::power(spec.c, spec.alpha)
                            : DecayDeclaration::nonsummable();
  }
  if (spec.name == FamilySpec::Name::custom_file) return DecayDeclaration::finite_horizon();
  return DecayDeclaration::geometric(0.0, 0.0);  // zero biases
}

DecayDeclaration family_lambda_decay(const FamilySpec& spec) {
  switch (spec.name) {
    case FamilySpec::Name::unit_center_power:
      return DecayDeclaration::geometric(0.0, 0.0);
    case FamilySpec::Name::scaled_center:
      if (spec.lambda_scale == 0.0) return DecayDeclaration::geometric(0.0, 0.0);
      return spec.lambda_alpha > 1.0 ? DecayDeclaration::power(spec.lambda_scale, spec.lambda_alpha)
                                     : DecayDeclaration::nonsummable();
    case FamilySpec::Name::constant: {
      const double lambda = std::abs(spec.mask.center() - 1.0);
      return lambda == 0.0 ? DecayDeclaration::geometric(0.0, 0.0)
                           : DecayDeclaration::nonsummable();
    }
    case FamilySpec::Name::custom_file:
      return DecayDeclaration::finite_horizon();
  }
  return DecayDeclaration::finite_horizon();
}

}  // namespace convlim
