#include "vdamp/rng.hpp"

#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "vdamp/error.hpp"

namespace vdamp {

double CounterRng::gaussian(std::uint64_t counter) const {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, uniform(counter));
}

HaltonSequence::HaltonSequence(std::size_t dim, std::uint64_t seed) {
  static constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  if (dim == 0 || dim > std::size(kPrimes)) throw DomainError("Halton dimension must be in [1, 16]");
  CounterRng rng(seed);
  for (std::size_t i = 0; i < dim; ++i) {
    bases_.push_back(kPrimes[i]);
    shift_.push_back(seed == 0 ? 0.0 : rng.uniform(i));
  }
}

void HaltonSequence::next(std::span<double> out) {
  ++index_;
  for (std::size_t d = 0; d < bases_.size(); ++d) {
    const double base = bases_[d];
    double f = 1.0, r = 0.0;
    for (std::uint64_t i = index_; i > 0; i /= bases_[d]) {
      f /= base;
      r += f * static_cast<double>(i % bases_[d]);
    }
    r += shift_[d];
    out[d] = r - std::floor(r);
  }
}

}  // namespace vdamp
