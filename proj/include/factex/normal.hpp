#pragma once
// Standard normal CDF and quantile. Accuracy target: absolute error at or
// below 1e-10 against high-precision references, with quantile the
// functional inverse of cdf to 1e-9 over [-6, 6].

namespace factex {

double normal_cdf(double x);

// p must lie strictly inside (0,1); throws InputError otherwise
double normal_quantile(double p);

// upper-alpha critical point z_a with P(Z > z_a) = a
double normal_upper(double a);

}  // namespace factex
