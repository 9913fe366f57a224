#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <vector>

namespace txmerge {

// Fixed-capacity latency reservoir; percentiles computed over the most
// recent `capacity` samples (nearest-rank).
class LatencyRecorder {
 public:
  explicit LatencyRecorder(size_t capacity = 8192);

  void record(double millis);
  double percentile(double p) const;  // p in (0, 100]; 0 when empty
  size_t count() const;
  void reset();

 private:
  mutable std::mutex mtx_;
  std::vector<double> ring_;
  size_t capacity_;
  size_t next_ = 0;
  size_t filled_ = 0;
  uint64_t total_ = 0;
};

// Sliding-window completion rate over one-second buckets.
class ThroughputWindow {
 public:
  explicit ThroughputWindow(int window_seconds = 10);

  void record(uint64_t n = 1);
  double per_second() const;
  void reset();

 private:
  int64_t now_second() const;

  mutable std::mutex mtx_;
  int window_;
  std::vector<uint64_t> buckets_;
  std::vector<int64_t> bucket_second_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace txmerge
