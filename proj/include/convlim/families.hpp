#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "convlim/conv_core.hpp"
#include "convlim/criteria.hpp"
#include "convlim/relu_net.hpp"

namespace convlim {

// Deterministic mask/bias generators used by the CLI and the experiments.
//   unit_center_power(c, alpha): w^(n) = (1, c/n^alpha), b_n = (c/n^alpha) e_1
//   scaled_center:               w^(n) = (1 + lambda_n, tail_scale/n^tail_alpha)
//                                with lambda_n = (-1)^n lambda_scale/n^lambda_alpha
//                                (sign fixed when not alternating); zero biases
//   constant(mask):              the same mask at every layer; zero biases
//   custom_file(path):           a mask sequence JSON file; zero biases
struct FamilySpec {
  enum class Name { unit_center_power, scaled_center, constant, custom_file };

  Name name = Name::unit_center_power;
  double c = 1.0;
  double alpha = 2.0;
  double lambda_scale = 0.0;
  double lambda_alpha = 2.0;
  bool lambda_alternating = true;
  double tail_scale = 0.0;
  double tail_alpha = 2.0;
  FilterMask mask{1.0};
  std::filesystem::path path;
};

struct MaskFamily {
  std::vector<FilterMask> masks;
  std::vector<std::vector<double>> biases;
  WidthSchedule widths;
};

MaskFamily generate_family(const FamilySpec& spec, std::size_t horizon, std::size_t d);

// Finite network built from a generated family.
NetworkSpec family_network(const MaskFamily& family, std::size_t d);

// The tail laws a generated family is known to obey, in the form the
// criterion checkers consume. For custom files nothing is known.
DecayDeclaration family_tail_decay(const FamilySpec& spec);
DecayDeclaration family_bias_decay(const FamilySpec& spec);
DecayDeclaration family_lambda_decay(const FamilySpec& spec);

}  // namespace convlim
