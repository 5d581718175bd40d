#include <cmath>
#include <cstdio>
#include <ostream>

#include "convlim/cli.hpp"
#include "convlim/conv_core.hpp"
#include "convlim/product_limits.hpp"
#include "convlim/relu_net.hpp"
#include "convlim/rng.hpp"

namespace convlim {

namespace {

NetworkSpec random_dense_net(std::mt19937_64& rng, std::size_t d, std::size_t depth,
                             std::size_t max_growth) {
  std::vector<LayerSpec> layers;
  std::size_t prev = d;
  for (std::size_t k = 0; k < depth; ++k) {
    const std::size_t next = std::min<std::size_t>(prev + rng() % (max_growth + 1), 8);
    const std::size_t out = std::max(prev, next);
    Matrix w(out, prev);
    for (double& v : w.data()) v = uniform_range(rng, -1.0, 1.0);
    std::vector<double> b(out);
    for (double& v : b) v = uniform_range(rng, -1.0, 1.0);
    layers.emplace_back(LayerWeight::dense(std::move(w)), std::move(b));
    prev = out;
  }
  return NetworkSpec(d, std::move(layers));
}

double representation_error(const NetworkSpec& net, std::size_t depth, std::mt19937_64& rng,
                            std::size_t points) {
  double worst = 0.0;
  std::vector<double> x(net.input_dim());
  for (std::size_t i = 0; i < points; ++i) {
    for (double& v : x) v = uniform01(rng);
    const ActivationTrace trace = activation_trace(net, x, depth);
    const AffineForm form = affine_representation(net, trace, depth);
    const std::vector<double> via_form = form.evaluate(x);
    const std::vector<double> via_forward = forward(net, x, depth);
    for (std::size_t j = 0; j < via_form.size(); ++j) {
      worst = std::max(worst, std::abs(via_form[j] - via_forward[j]));
    }
  }
  return worst;
}

// Sum over all nonempty index subsets whose largest index exceeds q of the
// product of the chosen entries. Exponential; n <= 20.
double series_lhs_enumeration(std::span<const double> a, std::size_t q) {
  const std::size_t n = a.size();
  if (n > 20) throw std::invalid_argument("series enumeration oracle: n must be <= 20");
  double total = 0.0;
  for (std::size_t mask = 1; mask < (std::size_t(1) << n); ++mask) {
    std::size_t top = 0;
    double prod = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::size_t(1) << i)) {
        prod *= a[i];
        top = i + 1;
      }
    }
    if (top > q) total += prod;
  }
  return total;
}

Matrix dense_activation(const ActivationMatrix& j) {
  Matrix m(j.width(), j.width());
  for (std::size_t i = 0; i < j.width(); ++i) m(i, i) = j.is_on(i) ? 1.0 : 0.0;
  return m;
}

bool report(std::ostream& out, const char* name, bool pass, double measure) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s %s (worst deviation %.3e)\n", pass ? "PASS" : "FAIL", name,
                measure);
  out << buf;
  return pass;
}

}  // namespace

bool run_verification_suites(std::ostream& out, std::uint64_t seed) {
  bool all = true;

  {
    std::mt19937_64 rng(splitmix64(seed));
    double worst = 0.0;
    for (std::size_t t = 0; t < 200; ++t) {
      const std::size_t d = 1 + rng() % 4;
      const std::size_t depth = 1 + rng() % 6;
      NetworkSpec net = random_dense_net(rng, d, depth, 3);
      worst = std::max(worst, representation_error(net, depth, rng, 30));
    }
    all &= report(out, "affine representation matches forward evaluation", worst <= 1e-9, worst);
  }

  {
    std::mt19937_64 rng(splitmix64(seed + 1));
    double worst = 0.0;
    for (std::size_t t = 0; t < 2000; ++t) {
      const std::size_t s = rng() % 9;
      const std::size_t m = 1 + rng() % 64;
      std::vector<double> coeffs(s + 1);
      for (double& v : coeffs) v = uniform_range(rng, -1.0, 1.0);
      FilterMask w(std::move(coeffs));
      std::vector<double> x(m);
      for (double& v : x) v = uniform_range(rng, -1.0, 1.0);
      const std::vector<double> via_t = matvec(toeplitz(w, m), x);
      const std::vector<double> via_c = convolve(x, w);
      for (std::size_t i = 0; i < via_t.size(); ++i) {
        worst = std::max(worst, std::abs(via_t[i] - via_c[i]));
      }
    }
    all &= report(out, "Toeplitz matvec agrees with direct convolution", worst <= 1e-12, worst);
  }

  {
    std::mt19937_64 rng(splitmix64(seed + 2));
    double worst_eq = 0.0;
    bool bound_ok = true;
    for (std::size_t t = 0; t < 1000; ++t) {
      const std::size_t n = 1 + rng() % 10;
      std::vector<double> a(n);
      for (double& v : a) v = uniform01(rng);
      const std::size_t q = rng() % (n + 1);
      const double closed = series_inequality_lhs(a, q);
      if (t < 300) {
        worst_eq = std::max(worst_eq, std::abs(closed - series_lhs_enumeration(a, q)));
      }
      double tail = 0.0, total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        total += a[i];
        if (i + 1 > q) tail += a[i];
      }
      bound_ok = bound_ok && closed <= tail * std::exp(total) + 1e-12;
    }
    all &= report(out, "series expansion closed form matches enumeration", worst_eq <= 1e-12,
                  worst_eq);
    all &= report(out, "series expansion obeys the exponential tail bound", bound_ok, 0.0);
  }

  {
    std::mt19937_64 rng(splitmix64(seed + 3));
    bool exact = true;
    for (std::size_t t = 0; t < 500 && exact; ++t) {
      const std::size_t d = 1 + rng() % 4;
      const std::size_t depth = 1 + rng() % 10;
      std::vector<std::size_t> ms{d};
      for (std::size_t i = 0; i < depth; ++i) ms.push_back(ms.back() + rng() % 4);
      WidthSchedule widths(d, ms);
      const std::size_t k = 1 + rng() % depth;
      std::vector<ActivationMatrix> js;
      for (std::size_t layer = k; layer <= depth; ++layer) {
        ActivationMatrix j(widths.width_at(layer));
        for (std::size_t bit = 0; bit < j.width(); ++bit) j.set(bit, rng() % 2 == 0);
        js.push_back(std::move(j));
      }
      const StabilizedProduct got = stabilized_activation_product(widths, k, js);
      Matrix brute = dense_activation(js[0]);
      brute = matmul(brute, materialize(EmbeddingMatrix(widths.width_at(k), widths.width_at(k - 1))));
      for (std::size_t idx = 1; idx < js.size(); ++idx) {
        const std::size_t layer = k + idx;
        Matrix step = matmul(dense_activation(js[idx]),
                             materialize(EmbeddingMatrix(widths.width_at(layer),
                                                         widths.width_at(layer - 1))));
        brute = matmul(step, brute);
      }
      exact = got.product == brute;
    }
    all &= report(out, "activation-embedding products collapse to a stabilized support", exact,
                  0.0);
  }

  return all;
}

double representation_spot_check(std::ostream& out, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  const std::size_t d = 1 + rng() % 4;
  const std::size_t depth = 1 + rng() % 6;
  NetworkSpec net = random_dense_net(rng, d, depth, 3);
  const double worst = representation_error(net, depth, rng, 100);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "max representation error %.3e over 100 points (d=%zu, depth=%zu)\n", worst, d,
                depth);
  out << buf;
  return worst;
}

}  // namespace convlim
