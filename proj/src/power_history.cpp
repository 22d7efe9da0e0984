#include "microgrid/power_history.hpp"

#include <algorithm>
#include <stdexcept>

namespace microgrid {

PowerHistory::PowerHistory(std::size_t capacity, double floor) : capacity_(capacity), floor_(floor) {
  if (capacity == 0) throw std::invalid_argument("PowerHistory: capacity must be > 0");
}

void PowerHistory::push(double kw) {
  if (full()) drop_oldest();
  tail_.v[tail_n_] = kw;
  tail_.prefix[tail_n_ + 1] = tail_.prefix[tail_n_] + kw;
  tail_.excess[tail_n_ + 1] = tail_.excess[tail_n_] + std::max(0.0, kw - floor_);
  ++tail_n_;
  ++size_;
  if (tail_n_ == kChunk) seal_tail();
}

void PowerHistory::seal_tail() {
  sealed_.push_back(std::make_shared<const Chunk>(tail_));
  tail_ = Chunk{};
  tail_n_ = 0;
}

void PowerHistory::drop_oldest() {
  if (size_ == 0) return;
  if (!sealed_.empty()) {
    if (++head_ == kChunk) {
      sealed_.erase(sealed_.begin());
      head_ = 0;
    }
  } else {
    // Only reachable with capacity < kChunk: shift the partial tail.
    std::copy(tail_.v.begin() + 1, tail_.v.begin() + static_cast<long>(tail_n_), tail_.v.begin());
    --tail_n_;
    tail_.prefix[0] = 0.0;
    tail_.excess[0] = 0.0;
    for (std::size_t i = 0; i < tail_n_; ++i) {
      tail_.prefix[i + 1] = tail_.prefix[i] + tail_.v[i];
      tail_.excess[i + 1] = tail_.excess[i] + std::max(0.0, tail_.v[i] - floor_);
    }
  }
  --size_;
}

double PowerHistory::sum() const {
  double s = 0.0;
  for (std::size_t c = 0; c < sealed_.size(); ++c) {
    const auto& ch = *sealed_[c];
    s += ch.prefix[kChunk] - (c == 0 ? ch.prefix[head_] : 0.0);
  }
  return s + tail_.prefix[tail_n_];
}

double PowerHistory::excess_sum() const {
  double s = 0.0;
  for (std::size_t c = 0; c < sealed_.size(); ++c) {
    const auto& ch = *sealed_[c];
    s += ch.excess[kChunk] - (c == 0 ? ch.excess[head_] : 0.0);
  }
  return s + tail_.excess[tail_n_];
}

double PowerHistory::oldest() const {
  if (size_ == 0) return 0.0;
  if (!sealed_.empty()) return sealed_.front()->v[head_];
  return tail_.v[0];
}

std::vector<double> PowerHistory::to_vector() const {
  std::vector<double> out;
  out.reserve(size_);
  visit_newest_first([&out](double x) {
    out.push_back(x);
    return true;
  });
  std::reverse(out.begin(), out.end());
  return out;
}

bool operator==(const PowerHistory& a, const PowerHistory& b) {
  return a.capacity_ == b.capacity_ && a.floor_ == b.floor_ && a.size_ == b.size_ &&
         a.to_vector() == b.to_vector();
}

}  // namespace microgrid
