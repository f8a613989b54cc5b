#ifndef KERNELCAST_HYBRID_HPP
#define KERNELCAST_HYBRID_HPP

#include <cmath>

#include "kernelcast/conformal.hpp"
#include "kernelcast/errors.hpp"

namespace kcast {

struct HybridWeights {
  double lambda1 = 0.5;
  double lambda2 = 0.5;

  void validate() const {
    if (lambda1 < 0 || lambda2 < 0 || std::abs(lambda1 + lambda2 - 1.0) > 1e-12)
      raise(Err::ConfigError, "hybrid weights must be nonnegative and sum to 1");
  }
};

enum class Scale { Transformed, Raw };

struct TaggedValue {
  double value = 0;
  Scale scale = Scale::Raw;
};

// Convex combination of the two point forecasts. Degenerate weights pass the
// surviving forecast through untouched so a lambda1 = 1 run is bit-identical
// to the plain first-model run.
inline double combine_point(const TaggedValue& first, const TaggedValue& second,
                            const HybridWeights& w) {
  w.validate();
  if (first.scale != second.scale)
    raise(Err::ScaleMismatch, "cannot combine forecasts on different scales");
  if (w.lambda1 == 1.0) return first.value;
  if (w.lambda2 == 1.0) return second.value;
  return w.lambda1 * first.value + w.lambda2 * second.value;
}

inline Interval combine_interval(const Interval& first, const Interval& second,
                                 const HybridWeights& w) {
  w.validate();
  if (first.lb > first.ub || second.lb > second.ub)
    raise(Err::InvalidInterval, "interval bounds out of order");
  if (w.lambda1 == 1.0) return first;
  if (w.lambda2 == 1.0) return second;
  return Interval{w.lambda1 * first.lb + w.lambda2 * second.lb,
                  w.lambda1 * first.ub + w.lambda2 * second.ub};
}

}  // namespace kcast

#endif
