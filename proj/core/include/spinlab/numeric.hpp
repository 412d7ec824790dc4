#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace spinlab {

// Compensated accumulator. Keeps the rounding error of long sums near one
// ulp so that normalization and identity tolerances hold independently of
// the state count.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

// Deterministic random source. The mapping from engine bits to doubles is
// fixed here rather than delegated to distribution classes, so identical
// seeds give identical streams on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Uniform integer in [0, n) by rejection, exact for every n.
  std::uint64_t integer(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  // Independent stream for work item `index`, reproducible from the seed
  // alone regardless of how much of this stream was consumed.
  Rng fork(std::uint64_t index) const {
    return Rng(seed_ ^ (0x9e3779b97f4a7c15ull * (index + 1)));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

// log(sum exp(v)) with max shift.
double log_sum_exp(std::span<const double> v);

// Runs fn(i) for i in [0, count) across hardware threads. Work items must
// be independent; results are written by index so the outcome does not
// depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace spinlab
