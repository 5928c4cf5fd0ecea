#pragma once

// Define-by-run reverse-mode differentiation over dense tensors.
//
// A Tape records every operation applied to Vars created from it. Calling
// backward() on a scalar Var walks the tape in reverse and accumulates
// gradients into the Parameters that were registered on it. Tapes are cheap
// and meant to be rebuilt for every forward pass.

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gacem/tensor.hpp"

namespace gacem::ad {

/// Trainable array plus its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad = Tensor(value.shape()); }
};

class Tape;

/// Handle to a node on a tape. Copyable; valid as long as the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  // Propagates the gradient of this node's output into its inputs.
  using Backprop = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  // Vars hold a pointer to their tape, so tapes stay put.
  Tape(Tape&&) = delete;
  Tape& operator=(Tape&&) = delete;

  Var constant(Tensor value);
  Var parameter(Parameter& p);

  /// Appends a node. `backprop` is dropped when no input needs a gradient.
  Var record(Tensor value, std::span<const Var> inputs, Backprop backprop);

  const Tensor& value(const Var& v) const { return nodes_[v.id()].value; }
  bool needs_grad(const Var& v) const { return nodes_[v.id()].needs_grad; }

  /// Adds `g` into the gradient buffer of `v` (no-op for constants).
  void accumulate(const Var& v, const Tensor& g);
  void accumulate(const Var& v, std::span<const double> g);

  /// Reverse sweep from a scalar output; adds into every registered Parameter::grad.
  void backward(const Var& output);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backprop backprop;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  std::vector<Node> nodes_;
};

// ---- primitives -----------------------------------------------------------

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var square(const Var& a);

Var tanh(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
/// Elementwise clamp; gradient is zero where the bound is active.
Var clamp(const Var& a, double lo, double hi);

Var sum(const Var& a);
Var mean(const Var& a);
/// Σ_i c_i·a_i with constant coefficients.
Var weighted_sum(const Var& a, std::span<const double> coeffs);

/// Column range [begin, end) of a rank-2 tensor.
Var slice_cols(const Var& a, std::size_t begin, std::size_t end);
/// Row-wise softmax of a rank-2 tensor.
Var softmax(const Var& a);
Var log_softmax(const Var& a);
/// Row-wise log-sum-exp of a rank-2 tensor, returns shape [rows].
Var log_sum_exp(const Var& a);

/// Elementwise log N(x; mu, sigma). All three operands share a shape.
Var gaussian_log_pdf(const Var& x, const Var& mu, const Var& sigma);
/// Elementwise standard normal CDF.
Var gaussian_cdf(const Var& z);

/// Log-probability of bin `bins[r]` for row r of a Gaussian mixture discretized
/// onto `num_bins` equal bins over [-1, 1] and renormalized over that interval.
/// logits/mu/sigma are [rows, K]; the result has shape [rows].
Var binned_mixture_log_prob(const Var& logits, const Var& mu, const Var& sigma,
                            std::span<const int> bins, int num_bins);

// ---- layers ---------------------------------------------------------------

/// Linear layer whose effective weight is weight∘mask.
struct MaskedLinear {
  Parameter weight;  // [out, in]
  Parameter bias;    // [out]
  Tensor mask;       // [out, in], entries in {0, 1}

  MaskedLinear() = default;
  MaskedLinear(std::string name, std::size_t in, std::size_t out);

  std::size_t in_features() const { return weight.value.cols(); }
  std::size_t out_features() const { return weight.value.rows(); }

  Tensor effective_weight() const;
  void init_uniform(std::mt19937_64& rng);
};

/// x: [batch, in] → (weight∘mask)·x + bias, shape [batch, out].
Var forward_masked_linear(const Var& x, MaskedLinear& layer);

// ---- optimizer ------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment gradient descent over a fixed parameter list.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig config);

  /// Moves parameters against their accumulated gradient, then zeroes it.
  void descend();
  /// Moves parameters along their accumulated gradient, then zeroes it.
  void ascend();

  const AdamConfig& config() const { return config_; }
  std::size_t steps() const { return step_; }

 private:
  void apply(double direction);

  std::vector<Parameter*> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t step_ = 0;
};

}  // namespace gacem::ad
