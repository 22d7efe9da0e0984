#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <vector>

namespace microgrid {

/// Sliding window of per-minute genset power samples (operating minutes only).
///
/// Full chunks are immutable and shared between copies, so cloning a genset
/// twin for a rollout costs a few pointer copies instead of the whole window.
/// Each chunk stores prefix sums of the raw samples and of their excess over
/// a reference floor; window sums are exact re-additions of those prefixes and
/// never accumulate add/subtract drift.
class PowerHistory {
 public:
  static constexpr std::size_t kChunk = 64;

  PowerHistory() : PowerHistory(2880, 0.0) {}
  /// `floor` is the level used for excess sums (the genset minimum power).
  PowerHistory(std::size_t capacity, double floor);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  bool full() const { return size_ == capacity_; }
  double floor() const { return floor_; }

  /// Appends a sample, evicting the oldest one when the window is full.
  void push(double kw);

  double sum() const;
  /// Sum of max(0, s - floor) over the window.
  double excess_sum() const;
  /// Oldest sample in the window; 0 when empty.
  double oldest() const;

  /// Calls f(sample) from the newest sample to the oldest; stops early when f
  /// returns false.
  template <class F>
  void visit_newest_first(F&& f) const;

  std::vector<double> to_vector() const;  // oldest first

  friend bool operator==(const PowerHistory& a, const PowerHistory& b);

 private:
  struct Chunk {
    std::array<double, kChunk> v{};
    std::array<double, kChunk + 1> prefix{};
    std::array<double, kChunk + 1> excess{};
  };

  void seal_tail();
  void drop_oldest();

  std::size_t capacity_;
  double floor_;
  std::size_t size_ = 0;
  std::vector<std::shared_ptr<const Chunk>> sealed_;
  std::size_t head_ = 0;  // evicted samples at the front of sealed_.front()
  Chunk tail_{};
  std::size_t tail_n_ = 0;
};

template <class F>
void PowerHistory::visit_newest_first(F&& f) const {
  for (std::size_t i = tail_n_; i-- > 0;)
    if (!f(tail_.v[i])) return;
  for (std::size_t c = sealed_.size(); c-- > 0;) {
    const std::size_t lo = c == 0 ? head_ : 0;
    for (std::size_t i = kChunk; i-- > lo;)
      if (!f(sealed_[c]->v[i])) return;
  }
}

}  // namespace microgrid
