#pragma once

namespace hettrim {

/// Standard normal quantile function (Wichura's AS241 rational approximation,
/// relative accuracy about 1e-16). Requires 0 < p < 1.
double normal_quantile(double p);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace hettrim
