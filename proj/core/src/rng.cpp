#include "redslds/rng.hpp"

#include <sstream>

#include "redslds/errors.hpp"

namespace redslds {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x5eed5eedU};
  engine_.seed(seq);
}

double Rng::uniform() {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  double u = dist(engine_);
  while (u <= 0.0) u = dist(engine_);
  return u;
}

double Rng::normal() {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(engine_);
}

double Rng::exponential() {
  std::exponential_distribution<double> dist(1.0);
  return dist(engine_);
}

double Rng::gamma(double shape) {
  std::gamma_distribution<double> dist(shape, 1.0);
  return dist(engine_);
}

double Rng::chi_square(double dof) { return 2.0 * gamma(0.5 * dof); }

std::string Rng::state() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

void Rng::set_state(const std::string& state) {
  std::istringstream in(state);
  in >> engine_;
  if (in.fail()) throw DataError("rng: malformed generator state");
}

}  // namespace redslds
