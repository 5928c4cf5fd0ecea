#include "gacem/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <set>

#include "gacem/errors.hpp"

namespace gacem::train {

using ad::Tape;
using ad::Var;

void TrainConfig::validate() const {
  if (n_init == 0 || n_samples == 0 || epochs == 0 || batch_size == 0 || max_iterations == 0) {
    throw ConfigError("train: n_init, n_samples, epochs, batch_size and max_iterations must be positive");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning rate must be positive");
  if (!(beta >= 0.0)) throw ConfigError("train: beta must be nonnegative");
  if (!(rank_fraction > 0.0 && rank_fraction <= 1.0)) throw ConfigError("train: rank fraction must lie in (0, 1]");
  if (!(ratio.lo > 0.0 && ratio.lo <= 1.0 && ratio.hi >= 1.0)) {
    throw ConfigError("train: ratio clip bounds must satisfy 0 < lo <= 1 <= hi");
  }
  if (collision_attempts == 0) throw ConfigError("train: collision attempts must be positive");
  if (record_samples == 0) throw ConfigError("train: record_samples must be positive");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ stream) ^ index);
}

std::vector<double> importance_ratios(std::span<const double> log_p, std::span<const double> log_p_buffer,
                                      const RatioConfig& config) {
  if (log_p.size() != log_p_buffer.size()) throw DimensionError("importance ratios: length mismatch");
  std::vector<double> r(log_p.size(), 1.0);
  if (config.mode == RatioMode::Off) return r;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double v = std::exp(log_p[i] - log_p_buffer[i]);
    if (config.mode == RatioMode::Exact) {
      if (!std::isfinite(v) || log_p_buffer[i] == -std::numeric_limits<double>::infinity()) {
        throw NumericError("importance ratio: buffer distribution assigns zero probability to a sample");
      }
      r[i] = v;
    } else {
      if (std::isnan(v)) throw NumericError("importance ratio: undefined ratio");
      r[i] = std::clamp(v, config.lo, config.hi);
    }
  }
  return r;
}

std::vector<double> score_coefficients(std::span<const double> weights, std::span<const double> log_p,
                                       std::span<const double> ratios, double beta) {
  if (weights.size() != log_p.size() || ratios.size() != log_p.size()) {
    throw DimensionError("score coefficients: length mismatch");
  }
  std::vector<double> c(log_p.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = ratios[i] * (weights[i] - beta * (1.0 + log_p[i]));
  return c;
}

namespace {

std::vector<double> accumulate_score_gradient(model::MadeModel& model, const GridBatch& samples,
                                              std::span<const double> weights, double beta,
                                              const model::MadeModel* buffer_model, const RatioConfig& ratio) {
  if (samples.size() == 0) throw ContractError("gradient estimate: no samples");
  if (weights.size() != samples.size()) throw DimensionError("gradient estimate: one weight per sample required");
  Tape tape;
  const Var lp = model.log_prob(tape, samples);
  const std::vector<double> lpv(lp.value().values().begin(), lp.value().values().end());
  std::vector<double> ratios(lpv.size(), 1.0);
  if (ratio.mode != RatioMode::Off) {
    if (buffer_model == nullptr) throw ContractError("gradient estimate: ratio mode needs a buffer model");
    ratios = importance_ratios(lpv, buffer_model->log_prob(samples), ratio);
  }
  const std::vector<double> coeffs = score_coefficients(weights, lpv, ratios, beta);
  std::vector<double> scaled(coeffs);
  for (double& c : scaled) c /= static_cast<double>(coeffs.size());
  tape.backward(ad::weighted_sum(lp, scaled));
  return coeffs;
}

}  // namespace

std::vector<double> grad_estimate_on_policy(model::MadeModel& model, const GridBatch& samples,
                                            std::span<const double> weights, double beta) {
  return accumulate_score_gradient(model, samples, weights, beta, nullptr, RatioConfig{});
}

std::vector<double> grad_estimate_off_policy(model::MadeModel& model, const GridBatch& samples,
                                             std::span<const double> weights, double beta,
                                             const model::MadeModel* buffer_model, const RatioConfig& ratio) {
  return accumulate_score_gradient(model, samples, weights, beta, buffer_model, ratio);
}

std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch_size, std::mt19937_64& rng) {
  if (batch_size == 0) throw ConfigError("minibatches: batch size must be positive");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t b = 0; b < n; b += batch_size) {
    out.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(b),
                     idx.begin() + static_cast<std::ptrdiff_t>(std::min(n, b + batch_size)));
  }
  return out;
}

double fit_buffer_dist(model::MadeModel& buffer_model, const ReplayBuffer& buffer, std::size_t epochs,
                       std::size_t batch_size, ad::Adam& optimizer, std::mt19937_64& rng) {
  if (buffer.empty()) throw ContractError("fit_buffer_dist: empty buffer");
  for (std::size_t e = 0; e < epochs; ++e) {
    for (const auto& mb : minibatches(buffer.size(), batch_size, rng)) {
      Tape tape;
      tape.backward(ad::mean(buffer_model.log_prob(tape, buffer.gather(mb))));
      optimizer.ascend();
    }
  }
  const auto lp = buffer_model.log_prob(buffer.designs());
  return std::accumulate(lp.begin(), lp.end(), 0.0) / static_cast<double>(lp.size());
}

namespace {

using Key = std::vector<int>;

// Most probable fresh design at the smallest ±1-step distance from `origin`.
Key nearest_unseen(const model::MadeModel& model, const Key& origin, int grid,
                   const std::function<bool(const Key&)>& fresh) {
  constexpr std::size_t kMaxVisited = 2'000'000;
  std::set<Key> visited{origin};
  std::vector<Key> frontier{origin};
  while (!frontier.empty()) {
    std::vector<Key> next;
    for (const Key& k : frontier) {
      for (std::size_t j = 0; j < k.size(); ++j) {
        for (int step : {-1, 1}) {
          Key n = k;
          n[j] += step;
          if (n[j] < 0 || n[j] >= grid || !visited.insert(n).second) continue;
          next.push_back(std::move(n));
        }
      }
    }
    if (visited.size() > kMaxVisited) break;
    GridBatch candidates(origin.size(), 0);
    for (const Key& k : next)
      if (fresh(k)) candidates.push_back(k);
    if (candidates.size() > 0) {
      const auto lp = model.log_prob(candidates);
      const auto best = static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
      const auto row = candidates.row(best);
      return Key(row.begin(), row.end());
    }
    frontier = std::move(next);
  }
  throw CapacityError("no unseen design left near the proposal");
}

}  // namespace

GridBatch propose_unseen(const model::MadeModel& model, const ReplayBuffer& buffer, std::size_t n,
                         std::uint64_t seed, std::size_t attempts) {
  const std::size_t d = model.dims();
  GridBatch out(d, 0);
  std::set<Key> taken;
  auto fresh = [&](const Key& k) { return !buffer.contains(k) && !taken.contains(k); };
  Key rejected;
  for (std::size_t round = 0; round < attempts && out.size() < n; ++round) {
    const GridBatch cand = model.sample(n - out.size(), derive_seed(seed, 0, round));
    for (std::size_t i = 0; i < cand.size(); ++i) {
      const auto row = cand.row(i);
      Key k(row.begin(), row.end());
      if (fresh(k)) {
        out.push_back(k);
        taken.insert(std::move(k));
      } else {
        rejected = std::move(k);
      }
    }
  }
  while (out.size() < n) {
    Key k = nearest_unseen(model, rejected, model.grid(), fresh);
    out.push_back(k);
    taken.insert(std::move(k));
  }
  return out;
}

// ---- algorithms -------------------------------------------------------------

namespace {

struct AlgorithmName {
  Algorithm algorithm;
  std::string_view name;
};

constexpr AlgorithmName kAlgorithms[] = {
    {Algorithm::Cem, "cem"},           {Algorithm::CemFixed, "cem-fixed"}, {Algorithm::CemppSg, "cempp-sg"},
    {Algorithm::CemppKde, "cempp-kde"}, {Algorithm::GacemOn, "gacem-on"},   {Algorithm::GacemOff, "gacem-off"},
};

enum Stream : std::uint64_t {
  kModelInit = 1,
  kMinibatchOrder,
  kBufferModelInit,
  kInitialPopulation,
  kRecordSamples,
  kProposals,
};

}  // namespace

Algorithm parse_algorithm(std::string_view name) {
  for (const auto& a : kAlgorithms)
    if (a.name == name) return a.algorithm;
  std::string valid;
  for (const auto& a : kAlgorithms) valid += (valid.empty() ? "" : ", ") + std::string(a.name);
  throw ConfigError("unknown algorithm '" + std::string(name) + "' (valid: " + valid + ")");
}

std::string_view algorithm_name(Algorithm a) {
  for (const auto& e : kAlgorithms)
    if (e.algorithm == a) return e.name;
  return "?";
}

std::vector<std::string> algorithm_names() {
  std::vector<std::string> out;
  for (const auto& a : kAlgorithms) out.emplace_back(a.name);
  return out;
}

bool is_gacem(Algorithm a) { return a == Algorithm::GacemOn || a == Algorithm::GacemOff; }

Runner::Runner(RunSetup setup)
    : setup_(std::move(setup)),
      buffer_(setup_.space.dims()),
      weights_(setup_.train.rank_fraction),
      order_rng_(derive_seed(setup_.train.seed, kMinibatchOrder)),
      started_(std::chrono::steady_clock::now()) {
  setup_.train.validate();
  setup_.cem.validate();
  if (setup_.space.dims() == 0) throw ConfigError("run: design space has no dimensions");
  setup_.model.dims = setup_.space.dims();
  setup_.model.grid = setup_.space.resolution();
  const std::uint64_t seed = setup_.train.seed;
  if (is_gacem(setup_.algorithm)) {
    setup_.train.policy = setup_.algorithm == Algorithm::GacemOn ? Policy::On : Policy::Off;
    model_ = std::make_shared<model::MadeModel>(setup_.model, derive_seed(seed, kModelInit));
    const ad::AdamConfig adam{.learning_rate = setup_.train.learning_rate};
    optimizer_ = std::make_unique<ad::Adam>(model_->parameters(), adam);
    // θ′ only feeds the importance ratio, so it is not fitted when the ratio is off.
    if (setup_.train.policy == Policy::Off && setup_.train.ratio.mode != RatioMode::Off) {
      buffer_model_ = std::make_unique<model::MadeModel>(setup_.model, derive_seed(seed, kBufferModelInit));
      buffer_optimizer_ = std::make_unique<ad::Adam>(buffer_model_->parameters(), adam);
    }
  }
  sampler_ = std::make_unique<UniformSampler>(setup_.space.dims(), setup_.space.resolution());
  initialize();
}

void Runner::initialize() {
  const std::size_t n = setup_.train.n_init;
  const std::uint64_t total = setup_.space.grid_size();
  if (total != 0 && total < n) throw CapacityError("run: grid has fewer points than the initial population");
  std::mt19937_64 rng(derive_seed(setup_.train.seed, kInitialPopulation));
  std::uniform_int_distribution<int> cell(0, setup_.space.resolution() - 1);
  GridBatch init(setup_.space.dims(), 0);
  std::set<Key> taken;
  Key k(setup_.space.dims());
  while (init.size() < n) {
    for (int& b : k) b = cell(rng);
    if (taken.insert(k).second) init.push_back(k);
  }
  evaluate_and_commit(init);
}

void Runner::evaluate_and_commit(const GridBatch& designs) {
  std::vector<double> values = objectives::evaluate(setup_.constraint, setup_.space, designs);
  for (double v : values)
    if (!std::isfinite(v)) throw NumericError("constraint evaluation produced a non-finite value");
  for (std::size_t i = 0; i < designs.size(); ++i) buffer_.insert(designs.row(i), values[i], iteration_);
  evaluations_ += designs.size();
  last_designs_ = designs;
  last_values_ = std::move(values);
}

void Runner::gacem_iteration() {
  const TrainConfig& tc = setup_.train;
  const bool on_policy = tc.policy == Policy::On;
  const GridBatch& pool = on_policy ? last_designs_ : buffer_.designs();
  const std::span<const double> pool_values = on_policy ? std::span<const double>(last_values_) : buffer_.values();

  const double f_bar = weights_.update(pool_values);
  std::vector<double> w(pool_values.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = compute_weight(pool_values[i], f_bar);

  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    if (buffer_model_) fit_buffer_dist(*buffer_model_, buffer_, 1, tc.batch_size, *buffer_optimizer_, order_rng_);
    for (const auto& mb : minibatches(pool.size(), tc.batch_size, order_rng_)) {
      GridBatch batch(pool.dims, 0);
      std::vector<double> bw;
      bw.reserve(mb.size());
      for (std::size_t i : mb) {
        batch.push_back(pool.row(i));
        bw.push_back(w[i]);
      }
      if (on_policy) {
        grad_estimate_on_policy(*model_, batch, bw, tc.beta);
      } else {
        grad_estimate_off_policy(*model_, batch, bw, tc.beta, buffer_model_.get(), tc.ratio);
      }
      optimizer_->ascend();
    }
  }
  sampler_ = std::make_unique<MadeSampler>(std::shared_ptr<const model::MadeModel>(model_));
  evaluate_and_commit(
      propose_unseen(*model_, buffer_, tc.n_samples, derive_seed(tc.seed, kProposals, iteration_), tc.collision_attempts));
}

void Runner::cem_iteration() {
  const cem::CemConfig& cc = setup_.cem;
  const int grid = setup_.space.resolution();
  const double q = cc.elite_percentile;
  switch (setup_.algorithm) {
    case Algorithm::Cem:
    case Algorithm::CemFixed: {
      const auto idx = cem::select_elites(last_values_, q);
      const auto lambda = cem::elite_weights(idx.size(), cc.weighting);
      const Eigen::MatrixXd elites = cem::rows_of(cem::to_matrix(last_designs_, grid), idx);
      auto dist = setup_.algorithm == Algorithm::Cem
                      ? cem::cem_update(elites, lambda,
                                        cem::jitter_schedule(cc, iteration_ - 1, setup_.train.max_iterations))
                      : cem::cem_fixed_variance_update(elites, lambda, cc.fixed_sigma);
      sampler_ = std::make_unique<GaussianSampler>(std::move(dist), grid);
      break;
    }
    case Algorithm::CemppSg:
      sampler_ = std::make_unique<GaussianSampler>(
          cem::cempp_update(cem::to_matrix(buffer_.designs(), grid), buffer_.values(), q, cc.weighting), grid);
      break;
    case Algorithm::CemppKde: {
      const auto idx = cem::select_elites(buffer_.values(), q);
      sampler_ = std::make_unique<KdeSampler>(cem::kde_fit(cem::rows_of(cem::to_matrix(buffer_.designs(), grid), idx)),
                                              grid);
      break;
    }
    default:
      throw ContractError("cem iteration: not a CEM-family algorithm");
  }
  evaluate_and_commit(sampler_->sample(setup_.train.n_samples, derive_seed(setup_.train.seed, kProposals, iteration_)));
}

metrics::RunRecord Runner::step() {
  if (done()) throw ContractError("run: iteration budget exhausted");
  ++iteration_;
  if (is_gacem(setup_.algorithm)) {
    gacem_iteration();
  } else {
    cem_iteration();
  }
  metrics::RunRecord rec;
  rec.iteration = iteration_;
  rec.evaluations = evaluations_;
  rec.satisfying_count = buffer_.satisfying_count();
  rec.top20_avg = metrics::top_k_average(buffer_.values(), 20);
  const GridBatch probe =
      sampler_->sample(setup_.train.record_samples, derive_seed(setup_.train.seed, kRecordSamples, iteration_));
  rec.accuracy_pct = metrics::accuracy_of(setup_.constraint, setup_.space, probe);
  rec.entropy_per_dim = metrics::cross_entropy_per_dim(*sampler_, probe);
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  return rec;
}

std::vector<metrics::RunRecord> Runner::run(const std::function<void(const metrics::RunRecord&)>& on_record) {
  std::vector<metrics::RunRecord> out;
  while (!done()) {
    out.push_back(step());
    if (on_record) on_record(out.back());
  }
  return out;
}

const Sampler& Runner::sampler() const { return *sampler_; }

checkpoint::Checkpoint Runner::make_checkpoint() const {
  using checkpoint::Checkpoint;
  Checkpoint ck;
  if (model_) {
    ck = checkpoint::from_model(*model_);
  } else if (const auto* g = dynamic_cast<const GaussianSampler*>(sampler_.get())) {
    const auto d = static_cast<std::size_t>(g->dist().mean.size());
    ck.kind = "gaussian";
    std::vector<double> mean(g->dist().mean.data(), g->dist().mean.data() + d);
    std::vector<double> cov(d * d);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c)
        cov[r * d + c] = g->dist().cov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    ck.arrays["mean"] = ad::Tensor({d}, std::move(mean));
    ck.arrays["cov"] = ad::Tensor({d, d}, std::move(cov));
  } else if (const auto* k = dynamic_cast<const KdeSampler*>(sampler_.get())) {
    const auto& kde = k->kde();
    const auto n = static_cast<std::size_t>(kde.points.rows()), d = static_cast<std::size_t>(kde.points.cols());
    ck.kind = "kde";
    std::vector<double> pts(n * d);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c)
        pts[r * d + c] = kde.points(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    ck.arrays["points"] = ad::Tensor({n, d}, std::move(pts));
    ck.arrays["bandwidth"] = ad::Tensor({d}, std::vector<double>(kde.bandwidth.data(), kde.bandwidth.data() + d));
  } else {
    ck.kind = "uniform";
  }
  ck.meta["algorithm"] = std::string(algorithm_name(setup_.algorithm));
  ck.meta["dims"] = setup_.space.dims();
  ck.meta["grid"] = setup_.space.resolution();
  return ck;
}

std::unique_ptr<Sampler> sampler_from_checkpoint(const checkpoint::Checkpoint& ck) {
  auto array = [&](const std::string& name) -> const ad::Tensor& {
    const auto it = ck.arrays.find(name);
    if (it == ck.arrays.end()) throw ConfigError("checkpoint: missing array '" + name + "'");
    return it->second;
  };
  if (ck.kind == "made") {
    return std::make_unique<MadeSampler>(std::make_shared<const model::MadeModel>(checkpoint::to_model(ck)));
  }
  if (!ck.meta.contains("grid") || !ck.meta.contains("dims")) throw ConfigError("checkpoint: missing grid metadata");
  const int grid = ck.meta.at("grid").get<int>();
  const auto dims = ck.meta.at("dims").get<std::size_t>();
  if (ck.kind == "gaussian") {
    const auto& mean = array("mean");
    const auto& cov = array("cov");
    if (mean.size() != dims || cov.size() != dims * dims) throw ConfigError("checkpoint: gaussian shape mismatch");
    cem::GaussianSearchDist dist;
    dist.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(dims));
    dist.cov = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        cov.data(), static_cast<Eigen::Index>(dims), static_cast<Eigen::Index>(dims));
    return std::make_unique<GaussianSampler>(std::move(dist), grid);
  }
  if (ck.kind == "kde") {
    const auto& pts = array("points");
    const auto& bw = array("bandwidth");
    if (pts.rank() != 2 || pts.cols() != dims || bw.size() != dims) throw ConfigError("checkpoint: kde shape mismatch");
    cem::KdeModel kde;
    kde.points = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        pts.data(), static_cast<Eigen::Index>(pts.rows()), static_cast<Eigen::Index>(dims));
    kde.bandwidth = Eigen::Map<const Eigen::VectorXd>(bw.data(), static_cast<Eigen::Index>(dims));
    return std::make_unique<KdeSampler>(std::move(kde), grid);
  }
  if (ck.kind == "uniform") return std::make_unique<UniformSampler>(dims, grid);
  throw ConfigError("checkpoint: unknown kind '" + ck.kind + "'");
}

}  // namespace gacem::train
