#include "gacem/made.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "gacem/kernels.hpp"
#include "gacem/normal.hpp"

namespace gacem::model {

using ad::Tensor;
using ad::Var;

void ModelConfig::validate() const {
  if (dims == 0) throw ConfigError("model: dims must be positive");
  if (num_mixtures == 0 || num_mixtures > 256) throw ConfigError("model: num_mixtures must lie in [1, 256]");
  if (grid < 2) throw ConfigError("model: grid resolution must be at least 2");
  for (std::size_t h : hidden) {
    if (h == 0) throw ConfigError("model: hidden sizes must be positive");
  }
  if (hidden.empty()) throw ConfigError("model: at least one hidden layer required");
  for (std::size_t h : first_unit_hidden) {
    if (h == 0) throw ConfigError("model: first-unit hidden sizes must be positive");
  }
  if (fixed_sigma && !(*fixed_sigma > 0.0)) throw ConfigError("model: fixed_sigma must be positive");
}

// ---- masks ----------------------------------------------------------------

MaskSet build_masks(const ModelConfig& config) {
  config.validate();
  const std::size_t d = config.dims;
  const std::size_t width = config.block_width();
  MaskSet set;

  auto degrees_for = [d](std::size_t units) {
    std::vector<int> deg(units, 0);
    if (d > 1) {
      for (std::size_t u = 0; u < units; ++u) deg[u] = static_cast<int>(u % (d - 1)) + 1;
    }
    return deg;
  };

  std::vector<int> prev(d);
  for (std::size_t j = 0; j < d; ++j) prev[j] = static_cast<int>(j) + 1;
  for (std::size_t layer = 0; layer < config.hidden.size(); ++layer) {
    const std::vector<int> cur = degrees_for(config.hidden[layer]);
    Tensor m = Tensor::matrix(cur.size(), prev.size());
    for (std::size_t o = 0; o < cur.size(); ++o)
      for (std::size_t i = 0; i < prev.size(); ++i) m.at(o, i) = cur[o] >= prev[i] ? 1.0 : 0.0;
    set.layers.push_back(std::move(m));
    if (layer == 0) set.hidden_degrees_first = cur;
    prev = cur;
  }
  Tensor out = Tensor::matrix(d * width, prev.size());
  for (std::size_t dim = 0; dim < d; ++dim)
    for (std::size_t o = 0; o < width; ++o)
      for (std::size_t i = 0; i < prev.size(); ++i)
        out.at(dim * width + o, i) = static_cast<int>(dim) + 1 > prev[i] ? 1.0 : 0.0;
  set.layers.push_back(std::move(out));
  return set;
}

Tensor composite_connectivity(const MaskSet& masks) {
  Tensor acc = masks.layers.front();
  for (std::size_t l = 1; l < masks.layers.size(); ++l) {
    const Tensor& m = masks.layers[l];
    Tensor next = Tensor::matrix(m.rows(), acc.cols());
    for (std::size_t o = 0; o < m.rows(); ++o)
      for (std::size_t h = 0; h < m.cols(); ++h) {
        if (m.at(o, h) == 0.0) continue;
        for (std::size_t j = 0; j < acc.cols(); ++j)
          if (acc.at(h, j) != 0.0) next.at(o, j) = 1.0;
      }
    acc = std::move(next);
  }
  return acc;
}

std::vector<double> MixtureParams::weights(std::size_t dim, std::size_t row) const {
  const double* l = logits.data() + offset(dim, row);
  const double z = normal::log_sum_exp(l, components);
  std::vector<double> w(components);
  for (std::size_t k = 0; k < components; ++k) w[k] = std::exp(l[k] - z);
  return w;
}

Tensor normalized_batch(const GridBatch& designs, int grid) {
  const std::size_t n = designs.size(), d = designs.dims;
  Tensor x = Tensor::matrix(n, d);
  for (std::size_t i = 0; i < n * d; ++i) x[i] = kernels::bin_center(designs.bins[i], grid);
  return x;
}

// ---- model ----------------------------------------------------------------

MadeModel::MadeModel(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  masks_ = build_masks(config_);
  std::size_t in = config_.dims;
  for (std::size_t l = 0; l < masks_.layers.size(); ++l) {
    const std::size_t out = masks_.layers[l].rows();
    ad::MaskedLinear layer("net." + std::to_string(l), in, out);
    layer.mask = masks_.layers[l];
    net_.push_back(std::move(layer));
    in = out;
  }
  in = 1;
  const std::size_t width = config_.block_width();
  for (std::size_t l = 0; l <= config_.first_unit_hidden.size(); ++l) {
    const std::size_t out = l < config_.first_unit_hidden.size() ? config_.first_unit_hidden[l] : width;
    first_unit_.emplace_back("first_unit." + std::to_string(l), in, out);
    in = out;
  }
  initialize(seed);
}

void MadeModel::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < net_.size(); ++l) net_[l].init_uniform(rng);
  for (std::size_t l = 0; l + 1 < first_unit_.size(); ++l) first_unit_[l].init_uniform(rng);
  // Output heads start at zero weights, so the initial conditionals are the
  // bias-only mixture: equal weights, means spread evenly over [-1, 1].
  const std::size_t K = config_.num_mixtures;
  const std::size_t width = config_.block_width();
  ad::MaskedLinear& head = net_.back();
  head.weight.value.fill(0.0);
  head.bias.value.fill(0.0);
  for (std::size_t dim = 0; dim < config_.dims; ++dim) {
    double* b = head.bias.value.data() + dim * width;
    for (std::size_t k = 0; k < K; ++k) {
      b[K + k] = K == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(K - 1);
      if (!config_.fixed_sigma) b[2 * K + k] = std::log(2.0 / static_cast<double>(K));
    }
  }
  first_unit_.back().weight.value.fill(0.0);
  first_unit_.back().bias.value.fill(0.0);
}

std::vector<ad::Parameter*> MadeModel::parameters() {
  std::vector<ad::Parameter*> ps;
  for (auto& l : net_) {
    ps.push_back(&l.weight);
    ps.push_back(&l.bias);
  }
  for (auto& l : first_unit_) {
    ps.push_back(&l.weight);
    ps.push_back(&l.bias);
  }
  return ps;
}

std::vector<const ad::Parameter*> MadeModel::parameters() const {
  std::vector<const ad::Parameter*> ps;
  for (const auto& l : net_) {
    ps.push_back(&l.weight);
    ps.push_back(&l.bias);
  }
  for (const auto& l : first_unit_) {
    ps.push_back(&l.weight);
    ps.push_back(&l.bias);
  }
  return ps;
}

std::size_t MadeModel::parameter_count() const {
  std::size_t n = 0;
  for (const ad::Parameter* p : parameters()) n += p->value.size();
  return n;
}

void MadeModel::copy_parameters_from(const MadeModel& other) {
  auto dst = parameters();
  auto src = other.parameters();
  if (dst.size() != src.size()) throw ConfigError("model: parameter layouts differ");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (!dst[i]->value.same_shape(src[i]->value)) throw ConfigError("model: parameter shapes differ");
    dst[i]->value = src[i]->value;
    dst[i]->zero_grad();
  }
}

void MadeModel::check_inputs(const Tensor& x) const {
  if (x.rank() != 2 || x.cols() != config_.dims) {
    throw DimensionError("model: expected inputs of shape [batch, " + std::to_string(config_.dims) + "], got " +
                         ad::shape_string(x.shape()));
  }
  for (double v : x.values()) {
    if (!(std::abs(v) <= 1.0 + 1e-9)) throw DomainError("model: inputs must lie in [-1, 1]");
  }
}

Tensor MadeModel::normalized_inputs(const GridBatch& designs) const {
  if (designs.dims != config_.dims) throw DimensionError("model: design dimensionality mismatch");
  for (int b : designs.bins) {
    if (b < 0 || b >= config_.grid) throw ContractError("model: design is not on the grid");
  }
  return normalized_batch(designs, config_.grid);
}

MadeModel::Heads MadeModel::forward(ad::Tape& tape, const Tensor& x) {
  check_inputs(x);
  const std::size_t batch = x.rows();
  const std::size_t K = config_.num_mixtures;
  const std::size_t width = config_.block_width();

  Var h = tape.constant(x);
  for (std::size_t l = 0; l + 1 < net_.size(); ++l) h = ad::tanh(ad::forward_masked_linear(h, net_[l]));
  const Var out = ad::forward_masked_linear(h, net_.back());

  Var f = tape.constant(Tensor::matrix(batch, 1, 1.0));
  for (std::size_t l = 0; l + 1 < first_unit_.size(); ++l) f = ad::tanh(ad::forward_masked_linear(f, first_unit_[l]));
  const Var first = ad::forward_masked_linear(f, first_unit_.back());

  Heads heads;
  for (std::size_t dim = 0; dim < config_.dims; ++dim) {
    Var block = ad::slice_cols(out, dim * width, (dim + 1) * width);
    if (dim == 0) block = ad::add(block, first);
    heads.logits.push_back(ad::slice_cols(block, 0, K));
    heads.mu.push_back(ad::slice_cols(block, K, 2 * K));
    if (config_.fixed_sigma) {
      heads.sigma.push_back(tape.constant(Tensor::matrix(batch, K, *config_.fixed_sigma)));
    } else {
      heads.sigma.push_back(ad::clamp(ad::exp(ad::slice_cols(block, 2 * K, 3 * K)), kMinSigma, kMaxSigma));
    }
  }
  return heads;
}

Var MadeModel::log_prob(ad::Tape& tape, const GridBatch& designs) {
  const Tensor x = normalized_inputs(designs);
  const Heads heads = forward(tape, x);
  const std::size_t n = designs.size(), d = config_.dims;
  Var total;
  std::vector<int> bins(n);
  for (std::size_t dim = 0; dim < d; ++dim) {
    for (std::size_t r = 0; r < n; ++r) bins[r] = designs.bins[r * d + dim];
    const Var lp = ad::binned_mixture_log_prob(heads.logits[dim], heads.mu[dim], heads.sigma[dim], bins, config_.grid);
    total = dim == 0 ? lp : ad::add(total, lp);
  }
  return total;
}

Var MadeModel::log_prob_continuous(ad::Tape& tape, const Tensor& x) {
  const Heads heads = forward(tape, x);
  const std::size_t n = x.rows(), d = config_.dims, K = config_.num_mixtures;
  Var total;
  for (std::size_t dim = 0; dim < d; ++dim) {
    Tensor xs = Tensor::matrix(n, K);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t k = 0; k < K; ++k) xs.at(r, k) = x.at(r, dim);
    const Var comp = ad::gaussian_log_pdf(tape.constant(std::move(xs)), heads.mu[dim], heads.sigma[dim]);
    const Var lp = ad::log_sum_exp(ad::add(ad::log_softmax(heads.logits[dim]), comp));
    total = dim == 0 ? lp : ad::add(total, lp);
  }
  return total;
}

// ---- inference ------------------------------------------------------------

std::vector<double> MadeModel::hidden_forward(const Tensor& x) const {
  const std::size_t batch = x.rows();
  std::vector<double> cur(x.values().begin(), x.values().end());
  std::size_t in = config_.dims;
  for (std::size_t l = 0; l + 1 < net_.size(); ++l) {
    const std::size_t out = net_[l].out_features();
    std::vector<double> next(batch * out);
    const Tensor w = net_[l].effective_weight();
    kernels::linear_forward({batch, in, out}, cur, w.values(), net_[l].bias.value.values(), next);
    for (double& v : next) v = std::tanh(v);
    cur = std::move(next);
    in = out;
  }
  return cur;
}

std::vector<double> MadeModel::first_unit_output() const {
  std::vector<double> cur{1.0};
  std::size_t in = 1;
  for (std::size_t l = 0; l < first_unit_.size(); ++l) {
    const std::size_t out = first_unit_[l].out_features();
    std::vector<double> next(out);
    const Tensor w = first_unit_[l].effective_weight();
    kernels::linear_forward({1, in, out}, cur, w.values(), first_unit_[l].bias.value.values(), next);
    if (l + 1 < first_unit_.size()) {
      for (double& v : next) v = std::tanh(v);
    }
    cur = std::move(next);
    in = out;
  }
  return cur;
}

void MadeModel::decode_block(const double* raw, std::size_t row, std::size_t dim, MixtureParams& out) const {
  const std::size_t K = config_.num_mixtures;
  const std::size_t off = out.offset(dim, row);
  for (std::size_t k = 0; k < K; ++k) {
    out.logits[off + k] = raw[k];
    out.mu[off + k] = raw[K + k];
    out.sigma[off + k] = config_.fixed_sigma ? *config_.fixed_sigma
                                             : std::clamp(std::exp(raw[2 * K + k]), kMinSigma, kMaxSigma);
  }
}

MixtureParams MadeModel::mixture_params(const Tensor& x) const {
  check_inputs(x);
  const std::size_t batch = x.rows(), d = config_.dims, K = config_.num_mixtures;
  const std::size_t width = config_.block_width();
  const std::vector<double> h = hidden_forward(x);
  const ad::MaskedLinear& head = net_.back();
  std::vector<double> raw(batch * d * width);
  const Tensor w = head.effective_weight();
  kernels::linear_forward({batch, head.in_features(), d * width}, h, w.values(), head.bias.value.values(), raw);
  const std::vector<double> first = first_unit_output();

  MixtureParams p;
  p.batch = batch;
  p.dims = d;
  p.components = K;
  p.logits.resize(d * batch * K);
  p.mu.resize(d * batch * K);
  p.sigma.resize(d * batch * K);
  std::vector<double> block(width);
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t dim = 0; dim < d; ++dim) {
      const double* src = raw.data() + (r * d + dim) * width;
      if (dim == 0) {
        for (std::size_t j = 0; j < width; ++j) block[j] = src[j] + first[j];
        decode_block(block.data(), r, dim, p);
      } else {
        decode_block(src, r, dim, p);
      }
    }
  }
  return p;
}

std::vector<double> MadeModel::log_prob(const GridBatch& designs) const {
  const Tensor x = normalized_inputs(designs);
  const MixtureParams p = mixture_params(x);
  const std::size_t n = designs.size(), d = config_.dims;
  std::vector<double> total(n, 0.0), lp(n);
  std::vector<int> bins(n);
  for (std::size_t dim = 0; dim < d; ++dim) {
    for (std::size_t r = 0; r < n; ++r) bins[r] = designs.bins[r * d + dim];
    kernels::mixture_log_prob({n, p.components, config_.grid}, p.logits_of(dim), p.mu_of(dim), p.sigma_of(dim), bins,
                              lp, nullptr);
    for (std::size_t r = 0; r < n; ++r) total[r] += lp[r];
  }
  return total;
}

std::vector<double> MadeModel::log_prob_continuous(const Tensor& x) const {
  const MixtureParams p = mixture_params(x);
  const std::size_t n = x.rows(), d = config_.dims, K = p.components;
  std::vector<double> total(n, 0.0), terms(K);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t dim = 0; dim < d; ++dim) {
      const std::size_t off = p.offset(dim, r);
      const double z = normal::log_sum_exp(p.logits.data() + off, K);
      for (std::size_t k = 0; k < K; ++k)
        terms[k] = p.logits[off + k] - z + normal::log_pdf(x.at(r, dim), p.mu[off + k], p.sigma[off + k]);
      total[r] += normal::log_sum_exp(terms.data(), K);
    }
  }
  return total;
}

std::vector<double> MadeModel::conditional_pmf(const Tensor& x, std::size_t dim) const {
  const MixtureParams p = mixture_params(x);
  std::vector<double> pmf(x.rows() * static_cast<std::size_t>(config_.grid));
  kernels::mixture_pmf({x.rows(), p.components, config_.grid}, p.logits_of(dim), p.mu_of(dim), p.sigma_of(dim), pmf);
  return pmf;
}

GridBatch MadeModel::sample(std::size_t n, std::uint64_t seed) const {
  const std::size_t d = config_.dims, K = config_.num_mixtures;
  const std::size_t width = config_.block_width();
  GridBatch out(d, n);
  if (n == 0) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> uniforms(2 * n * d);
  for (double& u : uniforms) u = unif(rng);

  Tensor x = Tensor::matrix(n, d);
  const ad::MaskedLinear& head = net_.back();
  const Tensor w = head.effective_weight();
  const std::vector<double> first = first_unit_output();
  MixtureParams p;
  p.batch = n;
  p.dims = d;
  p.components = K;
  p.logits.resize(d * n * K);
  p.mu.resize(d * n * K);
  p.sigma.resize(d * n * K);
  std::vector<double> raw(n * width);
  std::vector<int> bins(n);
  for (std::size_t dim = 0; dim < d; ++dim) {
    // Only the head rows of this dimension are needed at this step.
    const std::size_t in = head.in_features();
    if (dim == 0 && d > 1) {
      // Block 0 sees no hidden units when d > 1; its head weights are fully masked.
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < width; ++j) raw[r * width + j] = head.bias.value[j];
    } else {
      const std::vector<double> h = hidden_forward(x);
      kernels::linear_forward({n, in, width}, h, w.values().subspan(dim * width * in, width * in),
                              head.bias.value.values().subspan(dim * width, width), raw);
    }
    if (dim == 0) {
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < width; ++j) raw[r * width + j] += first[j];
    }
    for (std::size_t r = 0; r < n; ++r) decode_block(raw.data() + r * width, r, dim, p);
    const std::span<const double> u(uniforms.data() + dim * 2 * n, 2 * n);
    kernels::mixture_sample({n, K, config_.grid}, p.logits_of(dim), p.mu_of(dim), p.sigma_of(dim), u, bins);
    for (std::size_t r = 0; r < n; ++r) {
      out.bins[r * d + dim] = bins[r];
      x.at(r, dim) = kernels::bin_center(bins[r], config_.grid);
    }
  }
  return out;
}

double MadeModel::entropy_estimate(std::size_t n, std::uint64_t seed) const {
  if (n == 0) throw ContractError("entropy estimate: need at least one sample");
  const GridBatch s = sample(n, seed);
  const std::vector<double> lp = log_prob(s);
  double acc = 0.0;
  for (double v : lp) acc += v;
  return -acc / static_cast<double>(n) / static_cast<double>(config_.dims);
}

}  // namespace gacem::model
