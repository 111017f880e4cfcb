#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbert {

using Real = double;

// Bad input data (files, labels, config values).
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parse failure; message carries line number / block id.
struct parse_error : data_error {
  using data_error::data_error;
};

// NaN/Inf detected or numeric contract violated.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic RNG. All randomness in the library flows through this so
// runs with the same seed are bit-reproducible across platforms
// (mt19937_64 output is fully specified; we avoid std::uniform_* whose
// algorithms are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return state_(); }

  // uniform in [0, 1)
  Real uniform() {
    return static_cast<Real>(state_() >> 11) * (1.0 / 9007199254740992.0);
  }

  Real uniform(Real lo, Real hi) { return lo + (hi - lo) * uniform(); }

  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(state_() % n);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 state_;
};

}  // namespace rbert
