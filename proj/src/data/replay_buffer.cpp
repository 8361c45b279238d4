#include "lfo/data/replay_buffer.hpp"

#include <stdexcept>

namespace lfo {

ReplayBuffer::ReplayBuffer(std::size_t capacity, int state_dim, int action_dim)
    : capacity_(capacity), state_dim_(state_dim), action_dim_(action_dim) {
  if (capacity_ == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  storage_.reserve(capacity_);
}

void ReplayBuffer::push(Transition t) {
  if (t.s.size() != state_dim_ || t.s_next.size() != state_dim_ || t.a.size() != action_dim_) {
    throw std::invalid_argument("replay push: transition dimensions do not match env spec");
  }
  if (count_ < capacity_) {
    storage_.push_back(std::move(t));
    count_ += 1;
  } else {
    storage_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
}

const Transition& ReplayBuffer::at(std::size_t k) const {
  if (k >= count_) throw std::out_of_range("replay at: index past buffer size");
  return storage_[(head_ + k) % count_];
}

std::vector<Transition> ReplayBuffer::sample(Rng& rng, int n) const {
  if (count_ == 0) throw std::runtime_error("cannot sample from an empty replay buffer");
  std::vector<Transition> batch;
  batch.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    batch.push_back(storage_[rng.uniform_index(count_)]);
  }
  return batch;
}

}  // namespace lfo
