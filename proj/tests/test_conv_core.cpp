#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "convlim/conv_core.hpp"
#include "support/oracles.hpp"

using namespace convlim;
using namespace convlim::testing;

TEST_CASE("convolution") {
  CHECK(convolve(std::vector<double>{1.0, 2.0}, FilterMask{1.0, 1.0}) ==
        std::vector<double>{1.0, 3.0, 2.0});
  CHECK(convolve(std::vector<double>{5.0}, FilterMask{1.0}) == std::vector<double>{5.0});
  CHECK(convolve(std::vector<double>{1.0, 2.0, 3.0}, FilterMask{0.0, 1.0}) ==
        std::vector<double>{0.0, 1.0, 2.0, 3.0});
}

TEST_CASE("toeplitz layout") {
  CHECK(toeplitz(FilterMask{1.0, 2.0}, 2) == Matrix{{1.0, 0.0}, {2.0, 1.0}, {0.0, 2.0}});
  CHECK(toeplitz(FilterMask{1.0}, 3) == Matrix::identity(3));
  CHECK(cnn_weight_matrix(FilterMask{1.0, 2.0}, 2) == toeplitz(FilterMask{1.0, 2.0}, 2));
}

TEST_CASE("toeplitz matvec equals convolution exactly") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t s = rng() % 9;
    const std::size_t m = 1 + rng() % 32;
    FilterMask w(random_vector(rng, s + 1));
    const std::vector<double> x = random_vector(rng, m);
    CHECK(matvec(toeplitz(w, m), x) == convolve(x, w));
  }
}

TEST_CASE("width schedules") {
  const std::size_t s1[] = {1, 1, 1};
  CHECK(cnn_widths(2, s1).widths == std::vector<std::size_t>{2, 3, 4, 5});
  CHECK(cnn_widths(3, std::span<const std::size_t>{}).widths == std::vector<std::size_t>{3});
  const std::size_t s2[] = {2, 2};
  CHECK(cnn_widths(1, s2).widths == std::vector<std::size_t>{1, 3, 5});
  CHECK_THROWS_AS(WidthSchedule(2, {2, 1}), std::invalid_argument);
}

TEST_CASE("shift decomposition") {
  const ShiftDecomposition sd = shift_decompose(toeplitz(FilterMask{1.0, 0.5}, 2));
  CHECK(sd.perturbation == Matrix{{0.0, 0.0}, {0.5, 0.0}, {0.0, 0.5}});
  CHECK(sd.embedding.target_rows == 3);
  CHECK(sd.embedding.source_cols == 2);

  const ShiftDecomposition sd2 = shift_decompose(toeplitz(FilterMask{2.0, 1.0}, 2), 2.0);
  CHECK(sd2.perturbation == Matrix{{0.0, 0.0}, {0.5, 0.0}, {0.0, 0.5}});

  const Matrix e = materialize(EmbeddingMatrix(4, 2));
  CHECK(shift_decompose(e).perturbation == Matrix(4, 2));

  CHECK_THROWS_AS(shift_decompose(toeplitz(FilterMask{1.0}, 2), 0.0), zero_center_error);
  CHECK_THROWS_AS(shift_decompose(Matrix(2, 3)), std::invalid_argument);
}

TEST_CASE("shift decomposition reconstructs the normalized weight") {
  std::mt19937_64 rng(29);
  for (int t = 0; t < 200; ++t) {
    const std::size_t m = 1 + rng() % 6;
    const Matrix w = random_matrix(rng, m + rng() % 4, m);
    const double c = uniform_range(rng, 0.5, 2.0);
    const ShiftDecomposition sd = shift_decompose(w, c);
    Matrix rebuilt = materialize(sd.embedding);
    for (std::size_t i = 0; i < rebuilt.rows(); ++i)
      for (std::size_t j = 0; j < rebuilt.cols(); ++j) rebuilt(i, j) += sd.perturbation(i, j);
    // Off-diagonal entries are untouched by the embedding and must match
    // bitwise; diagonal entries go through one subtraction and re-addition,
    // which costs at most a rounding each.
    for (std::size_t i = 0; i < w.rows(); ++i) {
      for (std::size_t j = 0; j < w.cols(); ++j) {
        const double scaled = w(i, j) / c;
        if (i != j) {
          CHECK(rebuilt(i, j) == scaled);
        } else {
          CHECK(rebuilt(i, j) == doctest::Approx(scaled).epsilon(4e-16));
        }
      }
    }
  }
}

TEST_CASE("mask ratio sum") {
  CHECK(mask_ratio_sum_term(FilterMask{1.0, 0.25, 0.25}) == 0.5);
  CHECK(mask_ratio_sum_term(FilterMask{2.0, 1.0}) == 0.5);
  CHECK(mask_ratio_sum_term(FilterMask{1.0}) == 0.0);
  CHECK_THROWS_AS(mask_ratio_sum_term(FilterMask{0.0, 1.0}), zero_center_error);
}

TEST_CASE("mask ratio dominates the perturbation norms") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 300; ++t) {
    const std::size_t s = rng() % 5;
    const std::size_t m = 1 + rng() % 12;
    std::vector<double> coeffs = random_vector(rng, s + 1);
    if (std::abs(coeffs[0]) < 0.1) coeffs[0] = 0.5;
    const FilterMask w(coeffs);
    const double ratio = mask_ratio_sum_term(w);
    const Matrix p = shift_decompose(toeplitz(w, m), w.center()).perturbation;
    const double n1 = induced_norm_exact(p, PNorm::one());
    const double ninf = induced_norm_exact(p, PNorm::infinity());
    CHECK(n1 <= ratio * (1.0 + 1e-12));
    CHECK(ninf <= ratio * (1.0 + 1e-12));
    if (m >= s + 1) {
      CHECK(n1 == doctest::Approx(ratio).epsilon(1e-12));
    }
  }
}

TEST_CASE("layer weight views agree") {
  std::mt19937_64 rng(37);
  for (int t = 0; t < 100; ++t) {
    const std::size_t s = rng() % 4;
    const std::size_t m = 1 + rng() % 10;
    const FilterMask w(random_vector(rng, s + 1));
    const LayerWeight lw = LayerWeight::conv(w, m);
    CHECK(lw.rows() == m + s);
    CHECK(lw.cols() == m);
    const std::vector<double> x = random_vector(rng, m);
    CHECK(lw.apply(x) == matvec(lw.materialized(), x));
    const Matrix a = random_matrix(rng, m, 1 + rng() % 3);
    CHECK(lw.apply_to_columns(a) == matmul(lw.materialized(), a));
  }
  CHECK_THROWS_AS(LayerWeight::conv(FilterMask{1.0, 1.0}, 5000).materialized(),
                  std::invalid_argument);
}

TEST_CASE("mask sequence files round-trip") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "convlim_masks_test.json";
  std::mt19937_64 rng(41);
  std::vector<FilterMask> masks;
  for (int n = 0; n < 8; ++n) masks.push_back(FilterMask(random_vector(rng, 1 + rng() % 4)));
  save_mask_sequence(path, masks);
  const std::vector<FilterMask> loaded = load_mask_sequence(path);
  REQUIRE(loaded.size() == masks.size());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    CHECK(loaded[i].coefficients == masks[i].coefficients);
  }
  fs::remove(path);
  CHECK_THROWS(load_mask_sequence(path));
}
