#include "convlim/relu_net.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace convlim {

LayerSpec::LayerSpec(LayerWeight w, std::vector<double> b)
    : weight(std::move(w)), bias(std::move(b)) {
  if (bias.size() != weight.rows()) {
    throw std::invalid_argument("LayerSpec: bias length must equal the output width");
  }
}

std::vector<double> LayerSpec::preactivation(std::span<const double> x) const {
  std::vector<double> z = weight.apply(x);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += bias[i];
  return z;
}

NetworkSpec::NetworkSpec(std::size_t input_dim, std::vector<LayerSpec> layers)
    : input_dim_(input_dim) {
  if (input_dim == 0) throw std::invalid_argument("NetworkSpec: input dimension must be >= 1");
  for (auto& l : layers) append_checked(std::move(l));
}

NetworkSpec::NetworkSpec(std::size_t input_dim, std::function<LayerSpec(std::size_t)> generator)
    : input_dim_(input_dim), generator_(std::move(generator)) {
  if (input_dim == 0) throw std::invalid_argument("NetworkSpec: input dimension must be >= 1");
  if (!generator_) throw std::invalid_argument("NetworkSpec: null layer generator");
}

void NetworkSpec::append_checked(LayerSpec layer) const {
  const std::size_t prev = layers_.empty() ? input_dim_ : layers_.back().output_width();
  if (layer.input_width() != prev) {
    throw std::invalid_argument("NetworkSpec: layer input width does not chain");
  }
  if (layer.output_width() < layer.input_width()) {
    throw std::invalid_argument("NetworkSpec: widths must be non-decreasing");
  }
  layers_.push_back(std::move(layer));
}

std::optional<std::size_t> NetworkSpec::finite_depth() const {
  if (generator_) return std::nullopt;
  return layers_.size();
}

void NetworkSpec::ensure_depth(std::size_t n) const {
  if (!generator_) {
    if (n > layers_.size()) {
      throw std::out_of_range("NetworkSpec: depth exceeds the available layers");
    }
    return;
  }
  std::lock_guard<std::mutex> lock(mutex_);
  while (layers_.size() < n) {
    append_checked(generator_(layers_.size() + 1));
  }
}

const LayerSpec& NetworkSpec::layer(std::size_t n) const {
  if (n == 0) throw std::invalid_argument("NetworkSpec::layer: layers are numbered from 1");
  if (!generator_) {
    if (n > layers_.size()) {
      throw std::out_of_range("NetworkSpec: depth exceeds the available layers");
    }
    return layers_[n - 1];
  }
  std::lock_guard<std::mutex> lock(mutex_);
  while (layers_.size() < n) {
    append_checked(generator_(layers_.size() + 1));
  }
  return layers_[n - 1];
}

WidthSchedule NetworkSpec::widths(std::size_t n) const {
  std::vector<std::size_t> ms;
  ms.reserve(n + 1);
  ms.push_back(input_dim_);
  for (std::size_t k = 1; k <= n; ++k) ms.push_back(layer(k).output_width());
  return WidthSchedule(input_dim_, std::move(ms));
}

double padded_diff_pnorm(const PaddedVector& a, const PaddedVector& b, const PNorm& p) {
  const std::size_t n = std::max(a.values.size(), b.values.size());
  std::vector<double> diff(n, 0.0);
  for (std::size_t i = 0; i < a.values.size(); ++i) diff[i] = a.values[i];
  for (std::size_t i = 0; i < b.values.size(); ++i) diff[i] -= b.values[i];
  return vector_pnorm(diff, p);
}

std::vector<double> AffineForm::evaluate(std::span<const double> x) const {
  std::vector<double> y = matvec(linear, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += offset[i];
  return y;
}

std::vector<double> forward(const NetworkSpec& net, std::span<const double> x, std::size_t n) {
  if (x.size() != net.input_dim()) {
    throw std::invalid_argument("forward: input length does not match the network");
  }
  std::vector<double> cur(x.begin(), x.end());
  for (std::size_t k = 1; k <= n; ++k) {
    cur = relu(net.layer(k).preactivation(cur));
  }
  return cur;
}

PaddedVector padded_forward(const NetworkSpec& net, std::span<const double> x, std::size_t n) {
  return PaddedVector{forward(net, x, n)};
}

ActivationTrace activation_trace(const NetworkSpec& net, std::span<const double> x,
                                 std::size_t n) {
  if (x.size() != net.input_dim()) {
    throw std::invalid_argument("activation_trace: input length does not match the network");
  }
  ActivationTrace trace;
  trace.layers.reserve(n);
  std::vector<double> cur(x.begin(), x.end());
  for (std::size_t k = 1; k <= n; ++k) {
    std::vector<double> z = net.layer(k).preactivation(cur);
    trace.layers.push_back(relu_pattern(z));
    cur = apply_activation(trace.layers.back(), z);
  }
  return trace;
}

AffineForm affine_representation(const NetworkSpec& net, const ActivationTrace& trace,
                                 std::size_t n) {
  if (trace.depth() < n) {
    throw std::invalid_argument("affine_representation: trace shorter than requested depth");
  }
  Matrix linear = Matrix::identity(net.input_dim());
  std::vector<double> offset(net.input_dim(), 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    const LayerSpec& layer = net.layer(k);
    const ActivationMatrix& j = trace.layers[k - 1];
    if (j.width() != layer.output_width()) {
      throw std::invalid_argument("affine_representation: trace width mismatch");
    }
    linear = apply_activation_rows(j, layer.weight.apply_to_columns(linear));
    std::vector<double> z = layer.weight.apply(offset);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += layer.bias[i];
    offset = apply_activation(j, z);
  }
  return AffineForm{std::move(linear), std::move(offset)};
}

bool domain_membership(const NetworkSpec& net, const ActivationTrace& trace,
                       std::span<const double> x, std::size_t n) {
  if (x.size() != net.input_dim()) {
    throw std::invalid_argument("domain_membership: input length does not match the network");
  }
  if (trace.depth() < n) {
    throw std::invalid_argument("domain_membership: trace shorter than requested depth");
  }
  std::vector<double> cur(x.begin(), x.end());
  for (std::size_t k = 1; k <= n; ++k) {
    std::vector<double> z = net.layer(k).preactivation(cur);
    const ActivationMatrix& j = trace.layers[k - 1];
    if (j.width() != z.size()) {
      throw std::invalid_argument("domain_membership: trace width mismatch");
    }
    for (std::size_t i = 0; i < z.size(); ++i) {
      const bool positive = z[i] > 0.0;
      if (positive != j.is_on(i)) return false;
    }
    cur = apply_activation(j, z);
  }
  return true;
}

namespace {

LayerSpec layer_from_json(const nlohmann::json& j) {
  std::vector<double> bias = j.at("bias").get<std::vector<double>>();
  if (j.contains("mask")) {
    FilterMask mask(j.at("mask").get<std::vector<double>>());
    const std::size_t out = bias.size();
    if (out <= mask.tail_size()) {
      throw std::runtime_error("network file: bias shorter than the mask tail");
    }
    return LayerSpec(LayerWeight::conv(std::move(mask), out - mask.tail_size()), std::move(bias));
  }
  if (j.contains("dense")) {
    const auto rows = j.at("dense").get<std::vector<std::vector<double>>>();
    if (rows.empty() || rows.front().empty()) {
      throw std::runtime_error("network file: dense weight must be a nonempty 2-D array");
    }
    Matrix w(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != w.cols()) {
        throw std::runtime_error("network file: ragged dense weight");
      }
      for (std::size_t k = 0; k < w.cols(); ++k) w(i, k) = rows[i][k];
    }
    return LayerSpec(LayerWeight::dense(std::move(w)), std::move(bias));
  }
  throw std::runtime_error("network file: layer needs a \"mask\" or \"dense\" field");
}

}  // namespace

NetworkSpec load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open network file: " + path.string());
  nlohmann::json j;
  in >> j;
  const std::size_t d = j.at("d").get<std::size_t>();
  std::vector<LayerSpec> layers;
  for (const auto& lj : j.at("layers")) layers.push_back(layer_from_json(lj));
  return NetworkSpec(d, std::move(layers));
}

void save_network(const std::filesystem::path& path, const NetworkSpec& net, std::size_t depth) {
  nlohmann::json j;
  j["d"] = net.input_dim();
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t n = 1; n <= depth; ++n) {
    const LayerSpec& l = net.layer(n);
    nlohmann::json lj;
    if (const FilterMask* m = l.weight.mask()) {
      lj["mask"] = m->coefficients;
    } else {
      const Matrix& w = *l.weight.dense_matrix();
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t i = 0; i < w.rows(); ++i) {
        rows.push_back(std::vector<double>(w.row(i).begin(), w.row(i).end()));
      }
      lj["dense"] = std::move(rows);
    }
    lj["bias"] = l.bias;
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write network file: " + path.string());
  out << j.dump() << "\n";
}

}  // namespace convlim
