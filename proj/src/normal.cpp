#include "factex/normal.hpp"

#include <boost/math/distributions/normal.hpp>

#include "factex/errors.hpp"

namespace factex {

namespace {
const boost::math::normal_distribution<double>& standard_normal() {
  static const boost::math::normal_distribution<double> dist(0.0, 1.0);
  return dist;
}
}  // namespace

double normal_cdf(double x) { return boost::math::cdf(standard_normal(), x); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw InputError("normal quantile: p must lie strictly in (0,1), got " +
                     std::to_string(p));
  return boost::math::quantile(standard_normal(), p);
}

// symmetry form: 1 - a near 1 loses the tail to rounding, -quantile(a) does not
double normal_upper(double a) { return -normal_quantile(a); }

}  // namespace factex
