#include "samra/replay_buffer.hpp"

#include <stdexcept>

namespace samra::marl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
}

void ReplayBuffer::push(TransitionRecord record) {
  if (records_.size() < capacity_) {
    records_.push_back(std::move(record));
    return;
  }
  records_[cursor_] = std::move(record);
  cursor_ = (cursor_ + 1) % capacity_;
}

const TransitionRecord& ReplayBuffer::oldest(std::size_t i) const {
  if (i >= records_.size()) throw std::out_of_range("ReplayBuffer::oldest");
  const std::size_t start = records_.size() < capacity_ ? 0 : cursor_;
  return records_[(start + i) % records_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch_size, Rng& rng) const {
  if (records_.empty()) throw std::logic_error("ReplayBuffer: sampling from an empty buffer");
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = rng.index(records_.size());
  return idx;
}

Batch ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  return gather(sample_indices(batch_size, rng));
}

Batch ReplayBuffer::gather(const std::vector<std::size_t>& indices) const {
  if (indices.empty()) throw std::invalid_argument("ReplayBuffer::gather: empty index set");
  const auto& first = records_.at(indices.front());
  const auto b = static_cast<Eigen::Index>(indices.size());
  Batch batch;
  batch.states.resize(static_cast<Eigen::Index>(first.state.size()), b);
  batch.next_states.resize(static_cast<Eigen::Index>(first.next_state.size()), b);
  batch.actions.resize(static_cast<Eigen::Index>(first.action.size()), b);
  batch.local_rewards.resize(static_cast<Eigen::Index>(first.local_rewards.size()), b);
  batch.global_rewards.resize(1, b);
  batch.not_terminal.resize(1, b);
  for (Eigen::Index c = 0; c < b; ++c) {
    const auto& r = records_.at(indices[static_cast<std::size_t>(c)]);
    batch.states.col(c) = Eigen::Map<const Vector>(r.state.data(), batch.states.rows());
    batch.next_states.col(c) = Eigen::Map<const Vector>(r.next_state.data(), batch.next_states.rows());
    batch.actions.col(c) = Eigen::Map<const Vector>(r.action.data(), batch.actions.rows());
    batch.local_rewards.col(c) =
        Eigen::Map<const Vector>(r.local_rewards.data(), batch.local_rewards.rows());
    batch.global_rewards(0, c) = r.global_reward;
    batch.not_terminal(0, c) = r.terminal ? 0.0 : 1.0;
  }
  return batch;
}

}  // namespace samra::marl
