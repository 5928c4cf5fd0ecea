#pragma once

// Uniform view over everything that can propose designs: the trained density
// model, the CEM-family search distributions, and simple reference samplers.

#include <cstdint>
#include <memory>
#include <vector>

#include "gacem/cem.hpp"
#include "gacem/grid.hpp"
#include "gacem/kde.hpp"
#include "gacem/made.hpp"

namespace gacem {

class Sampler {
 public:
  virtual ~Sampler() = default;

  virtual std::size_t dims() const = 0;
  virtual int grid() const = 0;
  virtual GridBatch sample(std::size_t n, std::uint64_t seed) const = 0;
  virtual bool has_density() const { return true; }
  /// log-probability of each design under the sampler's own bin pmf.
  virtual std::vector<double> log_pmf(const GridBatch& designs) const = 0;
};

class MadeSampler final : public Sampler {
 public:
  /// Non-owning view; the model must outlive the sampler.
  explicit MadeSampler(const model::MadeModel& m) : model_(&m, [](const model::MadeModel*) {}) {}
  explicit MadeSampler(std::shared_ptr<const model::MadeModel> m) : model_(std::move(m)) {}
  std::size_t dims() const override { return model_->dims(); }
  int grid() const override { return model_->grid(); }
  GridBatch sample(std::size_t n, std::uint64_t seed) const override { return model_->sample(n, seed); }
  std::vector<double> log_pmf(const GridBatch& designs) const override { return model_->log_prob(designs); }

 private:
  std::shared_ptr<const model::MadeModel> model_;
};

class GaussianSampler final : public Sampler {
 public:
  GaussianSampler(cem::GaussianSearchDist dist, int grid) : dist_(std::move(dist)), grid_(grid) {}
  std::size_t dims() const override { return static_cast<std::size_t>(dist_.mean.size()); }
  int grid() const override { return grid_; }
  GridBatch sample(std::size_t n, std::uint64_t seed) const override;
  std::vector<double> log_pmf(const GridBatch& designs) const override;
  const cem::GaussianSearchDist& dist() const { return dist_; }

 private:
  cem::GaussianSearchDist dist_;
  int grid_;
};

class KdeSampler final : public Sampler {
 public:
  KdeSampler(cem::KdeModel kde, int grid) : kde_(std::move(kde)), grid_(grid) {}
  std::size_t dims() const override { return static_cast<std::size_t>(kde_.points.cols()); }
  int grid() const override { return grid_; }
  GridBatch sample(std::size_t n, std::uint64_t seed) const override;
  std::vector<double> log_pmf(const GridBatch& designs) const override;
  const cem::KdeModel& kde() const { return kde_; }

 private:
  cem::KdeModel kde_;
  int grid_;
};

/// Uniform over all grid points.
class UniformSampler final : public Sampler {
 public:
  UniformSampler(std::size_t dims, int grid) : dims_(dims), grid_(grid) {}
  std::size_t dims() const override { return dims_; }
  int grid() const override { return grid_; }
  GridBatch sample(std::size_t n, std::uint64_t seed) const override;
  std::vector<double> log_pmf(const GridBatch& designs) const override;

 private:
  std::size_t dims_;
  int grid_;
};

/// Always returns one design.
class PointMassSampler final : public Sampler {
 public:
  PointMassSampler(std::vector<int> design, int grid) : design_(std::move(design)), grid_(grid) {}
  std::size_t dims() const override { return design_.size(); }
  int grid() const override { return grid_; }
  GridBatch sample(std::size_t n, std::uint64_t seed) const override;
  std::vector<double> log_pmf(const GridBatch& designs) const override;

 private:
  std::vector<int> design_;
  int grid_;
};

/// Replays a fixed set of designs cyclically; has no density.
class ReplaySampler final : public Sampler {
 public:
  ReplaySampler(GridBatch designs, int grid) : designs_(std::move(designs)), grid_(grid) {}
  std::size_t dims() const override { return designs_.dims; }
  int grid() const override { return grid_; }
  GridBatch sample(std::size_t n, std::uint64_t seed) const override;
  bool has_density() const override { return false; }
  std::vector<double> log_pmf(const GridBatch& designs) const override;

 private:
  GridBatch designs_;
  int grid_;
};

}  // namespace gacem
