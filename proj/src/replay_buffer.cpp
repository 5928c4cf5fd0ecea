#include "gacem/replay_buffer.hpp"

#include "gacem/errors.hpp"

namespace gacem::train {

std::size_t ReplayBuffer::KeyHash::operator()(const std::vector<int>& k) const noexcept {
  std::size_t h = 1469598103934665603ull;
  for (int v : k) {
    h ^= static_cast<std::size_t>(static_cast<unsigned>(v));
    h *= 1099511628211ull;
  }
  return h;
}

bool ReplayBuffer::contains(std::span<const int> design) const {
  return seen_.contains(std::vector<int>(design.begin(), design.end()));
}

bool ReplayBuffer::insert(std::span<const int> design, double value, std::size_t iteration) {
  if (design.size() != dims()) throw DimensionError("replay buffer: design has wrong dimensionality");
  if (!seen_.emplace(design.begin(), design.end()).second) return false;
  designs_.push_back(design);
  values_.push_back(value);
  stamps_.push_back(iteration);
  return true;
}

GridBatch ReplayBuffer::gather(std::span<const std::size_t> idx) const {
  GridBatch out(dims(), 0);
  out.bins.reserve(idx.size() * dims());
  for (std::size_t i : idx) out.push_back(designs_.row(i));
  return out;
}

std::vector<std::size_t> ReplayBuffer::entries_of(std::size_t iteration) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < stamps_.size(); ++i)
    if (stamps_[i] == iteration) out.push_back(i);
  return out;
}

std::size_t ReplayBuffer::satisfying_count() const {
  std::size_t n = 0;
  for (double v : values_) n += v <= 0.0 ? 1 : 0;
  return n;
}

}  // namespace gacem::train
