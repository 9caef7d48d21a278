#pragma once

#include <span>
#include <vector>

namespace etcsim {

/// Sample partial autocorrelations for lags 0..max_lag (lag 0 is 1 by
/// convention), via Durbin-Levinson on the biased autocovariance.
/// Throws ErrorKind::UndefinedCorrelation for a constant series.
std::vector<double> pacf(std::span<const double> series, int max_lag);

/// Same, pooling the autocovariance over several independent series (one per
/// storm) around their common mean. Only within-series pairs contribute.
std::vector<double> pacf_pooled(const std::vector<std::vector<double>>& series, int max_lag);

}  // namespace etcsim
