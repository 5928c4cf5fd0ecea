#pragma once

// Training loops: GACEM (on- and off-policy) and the CEM-family baselines,
// sharing one evaluation budget and one replay buffer so they can be compared
// iteration by iteration.

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gacem/autodiff.hpp"
#include "gacem/cem.hpp"
#include "gacem/checkpoint.hpp"
#include "gacem/kde.hpp"
#include "gacem/made.hpp"
#include "gacem/metrics.hpp"
#include "gacem/objectives.hpp"
#include "gacem/replay_buffer.hpp"
#include "gacem/samplers.hpp"
#include "gacem/weighting.hpp"

namespace gacem::train {

enum class Policy { On, Off };
enum class RatioMode { Off, Clipped, Exact };

struct RatioConfig {
  RatioMode mode = RatioMode::Off;
  double lo = 0.1;
  double hi = 10.0;
};

struct TrainConfig {
  double beta = 10.0;
  std::size_t n_init = 50;
  std::size_t n_samples = 25;
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  double learning_rate = 5e-3;
  std::size_t max_iterations = 60;
  Policy policy = Policy::Off;
  RatioConfig ratio;
  double rank_fraction = 0.4;
  std::size_t collision_attempts = 100;
  // Samples drawn for the accuracy/entropy columns of each per-iteration record.
  std::size_t record_samples = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Independent stream seed derived from a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

/// p_θ/p_θ′ per sample from the two log-probabilities, per the ratio mode.
/// Exact mode with p_θ′ = 0 (or any non-finite ratio) throws NumericError.
std::vector<double> importance_ratios(std::span<const double> log_p, std::span<const double> log_p_buffer,
                                      const RatioConfig& config);

/// Coefficients c_i = ratio_i·(w_i − β(1 + log p_i)), treated as constants.
std::vector<double> score_coefficients(std::span<const double> weights, std::span<const double> log_p,
                                       std::span<const double> ratios, double beta);

/// Accumulates (1/N)Σ w̃_i ∇log p(x_i) into the model's parameter gradients;
/// returns the coefficients w̃_i used.
std::vector<double> grad_estimate_on_policy(model::MadeModel& model, const GridBatch& samples,
                                            std::span<const double> weights, double beta);

/// As the on-policy estimator with every term scaled by the importance ratio
/// against `buffer_model` (ignored when the ratio mode is off).
std::vector<double> grad_estimate_off_policy(model::MadeModel& model, const GridBatch& samples,
                                             std::span<const double> weights, double beta,
                                             const model::MadeModel* buffer_model, const RatioConfig& ratio);

/// Maximum-likelihood epochs of `buffer_model` on uniformly shuffled buffer
/// minibatches. Returns the mean buffer log-likelihood after fitting.
double fit_buffer_dist(model::MadeModel& buffer_model, const ReplayBuffer& buffer, std::size_t epochs,
                       std::size_t batch_size, ad::Adam& optimizer, std::mt19937_64& rng);

/// Shuffled index minibatches covering [0, n) once.
std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch_size, std::mt19937_64& rng);

/// n designs from `model` that are absent from the buffer and from each other:
/// resample up to `attempts` rounds, then take the most probable unseen grid
/// neighbour of the last rejected draw.
GridBatch propose_unseen(const model::MadeModel& model, const ReplayBuffer& buffer, std::size_t n,
                         std::uint64_t seed, std::size_t attempts);

enum class Algorithm { Cem, CemFixed, CemppSg, CemppKde, GacemOn, GacemOff };

Algorithm parse_algorithm(std::string_view name);
std::string_view algorithm_name(Algorithm a);
std::vector<std::string> algorithm_names();
bool is_gacem(Algorithm a);

struct RunSetup {
  Algorithm algorithm = Algorithm::GacemOff;
  DesignSpace space;
  objectives::ConstraintSpec constraint{objectives::Objective::Synt, 2.0};
  TrainConfig train;
  cem::CemConfig cem;
  model::ModelConfig model;  // dims and grid are taken from the design space
};

/// One (algorithm, objective, seed) experiment, stepped one iteration at a time.
class Runner {
 public:
  explicit Runner(RunSetup setup);

  const RunSetup& setup() const { return setup_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  std::size_t evaluations() const { return evaluations_; }
  std::size_t iteration() const { return iteration_; }
  bool done() const { return iteration_ >= setup_.train.max_iterations; }

  /// Runs one iteration and returns its record.
  metrics::RunRecord step();
  /// Steps until max_iterations, handing each record to `on_record` as it is produced.
  std::vector<metrics::RunRecord> run(const std::function<void(const metrics::RunRecord&)>& on_record = {});

  /// Current proposal distribution (uniform before the first iteration).
  const Sampler& sampler() const;
  const model::MadeModel* model() const { return model_.get(); }
  checkpoint::Checkpoint make_checkpoint() const;

 private:
  void initialize();
  void evaluate_and_commit(const GridBatch& designs);
  void gacem_iteration();
  void cem_iteration();

  RunSetup setup_;
  ReplayBuffer buffer_;
  std::size_t evaluations_ = 0;
  std::size_t iteration_ = 0;
  WeightState weights_;
  std::mt19937_64 order_rng_;

  GridBatch last_designs_;
  std::vector<double> last_values_;

  std::shared_ptr<model::MadeModel> model_;
  std::unique_ptr<model::MadeModel> buffer_model_;
  std::unique_ptr<ad::Adam> optimizer_;
  std::unique_ptr<ad::Adam> buffer_optimizer_;

  std::unique_ptr<Sampler> sampler_;
  std::chrono::steady_clock::time_point started_;
};

/// Rebuilds the sampler stored in a checkpoint written by Runner::make_checkpoint.
std::unique_ptr<Sampler> sampler_from_checkpoint(const checkpoint::Checkpoint& ckpt);

}  // namespace gacem::train
