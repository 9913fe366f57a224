#include "txmerge/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace txmerge {

LatencyRecorder::LatencyRecorder(size_t capacity)
    : ring_(capacity, 0.0), capacity_(capacity) {}

void LatencyRecorder::record(double millis) {
  std::lock_guard guard(mtx_);
  ring_[next_] = millis;
  next_ = (next_ + 1) % capacity_;
  filled_ = std::min(filled_ + 1, capacity_);
  ++total_;
}

double LatencyRecorder::percentile(double p) const {
  std::lock_guard guard(mtx_);
  if (filled_ == 0) return 0.0;
  std::vector<double> sorted(ring_.begin(),
                             ring_.begin() + static_cast<long>(filled_));
  std::sort(sorted.begin(), sorted.end());
  size_t rank = static_cast<size_t>(
      std::ceil(p / 100.0 * static_cast<double>(filled_)));
  if (rank == 0) rank = 1;
  if (rank > filled_) rank = filled_;
  return sorted[rank - 1];
}

size_t LatencyRecorder::count() const {
  std::lock_guard guard(mtx_);
  return static_cast<size_t>(total_);
}

void LatencyRecorder::reset() {
  std::lock_guard guard(mtx_);
  next_ = filled_ = 0;
  total_ = 0;
}

ThroughputWindow::ThroughputWindow(int window_seconds)
    : window_(window_seconds),
      buckets_(static_cast<size_t>(window_seconds) + 2, 0),
      bucket_second_(static_cast<size_t>(window_seconds) + 2, -1),
      start_(std::chrono::steady_clock::now()) {}

int64_t ThroughputWindow::now_second() const {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::steady_clock::now() - start_)
      .count();
}

void ThroughputWindow::record(uint64_t n) {
  std::lock_guard guard(mtx_);
  int64_t sec = now_second();
  size_t idx = static_cast<size_t>(sec % static_cast<int64_t>(buckets_.size()));
  if (bucket_second_[idx] != sec) {
    bucket_second_[idx] = sec;
    buckets_[idx] = 0;
  }
  buckets_[idx] += n;
}

void ThroughputWindow::reset() {
  std::lock_guard guard(mtx_);
  std::fill(buckets_.begin(), buckets_.end(), 0);
  std::fill(bucket_second_.begin(), bucket_second_.end(), -1);
  start_ = std::chrono::steady_clock::now();
}

double ThroughputWindow::per_second() const {
  std::lock_guard guard(mtx_);
  int64_t sec = now_second();
  uint64_t total = 0;
  for (size_t i = 0; i < buckets_.size(); ++i) {
    int64_t age = sec - bucket_second_[i];
    if (bucket_second_[i] >= 0 && age >= 0 && age <= window_) total += buckets_[i];
  }
  double elapsed = std::min<double>(window_ + 1, static_cast<double>(sec) + 1.0);
  if (elapsed <= 0) return 0.0;
  return static_cast<double>(total) / elapsed;
}

}  // namespace txmerge
