#pragma once

// Masked autoregressive mixture-density model over a discretized box.
//
// The network maps a normalized design x ∈ [-1,1]^d to, for each dimension i,
// the mixing logits, means and scales of a K-component Gaussian mixture that
// depends only on x_<i (natural ordering). Dimension 1 has no inputs, so its
// block is driven by the output bias plus a small dedicated MLP fed with a
// constant. Each conditional is turned into a pmf over the grid cells of its
// axis by integrating the mixture over each cell and renormalizing on [-1,1].

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "gacem/autodiff.hpp"
#include "gacem/grid.hpp"

namespace gacem::model {

struct ModelConfig {
  std::size_t dims = 1;
  std::size_t num_mixtures = 40;
  std::vector<std::size_t> hidden{100, 100, 100};
  std::vector<std::size_t> first_unit_hidden{100};
  // When set, every component scale is this constant and the scale head is dropped.
  std::optional<double> fixed_sigma;
  int grid = 100;

  void validate() const;
  /// Outputs per dimension block: logits and means, plus log-scales when learned.
  std::size_t block_width() const { return (fixed_sigma ? 2 : 3) * num_mixtures; }
};

inline constexpr double kMinSigma = 1e-4;
inline constexpr double kMaxSigma = 2.0;

/// One binary mask per main-network layer, each shaped [out, in].
struct MaskSet {
  std::vector<ad::Tensor> layers;
  std::vector<int> hidden_degrees_first;  // degrees of the first hidden layer, for inspection
};

/// Natural-ordering masks with hidden degrees assigned round-robin over 1..d-1.
MaskSet build_masks(const ModelConfig& config);

/// Boolean product of the masks: entry [o, j] is nonzero iff output unit o
/// can see input j through some path.
ad::Tensor composite_connectivity(const MaskSet& masks);

/// Mixture parameters for a batch, laid out [dim][row][component].
struct MixtureParams {
  std::size_t batch = 0;
  std::size_t dims = 0;
  std::size_t components = 0;
  std::vector<double> logits;
  std::vector<double> mu;
  std::vector<double> sigma;

  std::size_t offset(std::size_t dim, std::size_t row) const { return (dim * batch + row) * components; }
  std::span<const double> logits_of(std::size_t dim) const {
    return {logits.data() + dim * batch * components, batch * components};
  }
  std::span<const double> mu_of(std::size_t dim) const {
    return {mu.data() + dim * batch * components, batch * components};
  }
  std::span<const double> sigma_of(std::size_t dim) const {
    return {sigma.data() + dim * batch * components, batch * components};
  }
  /// softmax of the logits of one (dim, row).
  std::vector<double> weights(std::size_t dim, std::size_t row) const;
};

class MadeModel {
 public:
  MadeModel(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const MaskSet& masks() const { return masks_; }
  std::size_t dims() const { return config_.dims; }
  int grid() const { return config_.grid; }

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
  std::size_t parameter_count() const;

  struct Heads {
    std::vector<ad::Var> logits;
    std::vector<ad::Var> mu;
    std::vector<ad::Var> sigma;
  };

  /// Taped forward pass over normalized inputs [batch, dims].
  Heads forward(ad::Tape& tape, const ad::Tensor& x);

  /// Differentiable log-probability of grid designs, shape [batch].
  ad::Var log_prob(ad::Tape& tape, const GridBatch& designs);
  /// Differentiable continuous log-density of normalized points, shape [batch].
  ad::Var log_prob_continuous(ad::Tape& tape, const ad::Tensor& x);

  // ---- inference (no tape) ---------------------------------------------

  MixtureParams mixture_params(const ad::Tensor& x) const;
  std::vector<double> log_prob(const GridBatch& designs) const;
  std::vector<double> log_prob_continuous(const ad::Tensor& x) const;
  /// pmf over the cells of dimension `dim` for every row of x, [batch, grid].
  std::vector<double> conditional_pmf(const ad::Tensor& x, std::size_t dim) const;

  /// Ancestral sampling; deterministic in `seed`.
  GridBatch sample(std::size_t n, std::uint64_t seed) const;
  /// Monte Carlo entropy in nats, divided by the number of dimensions.
  double entropy_estimate(std::size_t n, std::uint64_t seed) const;

  /// Copies all parameter values from a model with the same configuration.
  void copy_parameters_from(const MadeModel& other);

 private:
  void check_inputs(const ad::Tensor& x) const;
  ad::Tensor normalized_inputs(const GridBatch& designs) const;
  std::vector<double> hidden_forward(const ad::Tensor& x) const;
  std::vector<double> first_unit_output() const;
  void decode_block(const double* raw, std::size_t row, std::size_t dim, MixtureParams& out) const;
  void initialize(std::uint64_t seed);

  ModelConfig config_;
  MaskSet masks_;
  std::vector<ad::MaskedLinear> net_;
  std::vector<ad::MaskedLinear> first_unit_;
};

/// Normalized coordinates of a batch of grid designs, [batch, dims].
ad::Tensor normalized_batch(const GridBatch& designs, int grid);

}  // namespace gacem::model
