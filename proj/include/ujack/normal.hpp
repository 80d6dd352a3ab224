#pragma once

// Standard normal quantile and CDF.

#include <stdexcept>

namespace ujack {

// Inverse standard normal CDF, Wichura's algorithm AS 241 (PPND16 variant),
// accurate to about 1e-16 relative over p in (0, 1).
// Throws std::invalid_argument("invalid-level") outside (0, 1).
double normal_quantile(double p);

// Standard normal CDF via erfc.
double normal_cdf(double x);

}  // namespace ujack
