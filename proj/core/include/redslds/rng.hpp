#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace redslds {

// Seeded generator used by every sampler in the library. Distributions are
// constructed per call so that the complete stream state is the engine
// state, which makes checkpoints exact.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);
  // Independent stream derived from (seed, stream), e.g. one per chain.
  Rng(std::uint64_t seed, std::uint64_t stream);

  double uniform();  // in (0, 1)
  double normal();
  double exponential();
  double gamma(double shape);  // unit scale
  double chi_square(double dof);

  std::string state() const;
  void set_state(const std::string& state);

  std::mt19937_64& engine() { return engine_; }

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace redslds
