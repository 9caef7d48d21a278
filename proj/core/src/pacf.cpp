#include "etcsim/pacf.hpp"

#include <algorithm>
#include <cmath>

#include "etcsim/errors.hpp"

namespace etcsim {

namespace {

std::vector<double> durbin_levinson(const std::vector<double>& acov, int max_lag) {
  if (!(acov[0] > 0.0)) throw Error(ErrorKind::UndefinedCorrelation, "series has zero variance");
  std::vector<double> out(static_cast<std::size_t>(max_lag) + 1, 0.0);
  out[0] = 1.0;
  std::vector<double> phi(static_cast<std::size_t>(max_lag) + 1, 0.0);
  std::vector<double> prev(phi.size(), 0.0);
  double v = acov[0];
  for (int k = 1; k <= max_lag; ++k) {
    double num = acov[k];
    for (int j = 1; j < k; ++j) num -= prev[j] * acov[k - j];
    const double a = num / v;
    phi[k] = a;
    for (int j = 1; j < k; ++j) phi[j] = prev[j] - a * prev[k - j];
    v *= (1.0 - a * a);
    out[k] = std::clamp(a, -1.0, 1.0);
    prev = phi;
  }
  return out;
}

}  // namespace

std::vector<double> pacf(std::span<const double> series, int max_lag) {
  return pacf_pooled({std::vector<double>(series.begin(), series.end())}, max_lag);
}

std::vector<double> pacf_pooled(const std::vector<std::vector<double>>& series, int max_lag) {
  if (max_lag < 0) throw Error(ErrorKind::Argument, "max_lag must be non-negative");
  double sum = 0.0;
  std::size_t n = 0;
  bool long_enough = false;
  for (const auto& s : series) {
    for (double x : s) sum += x;
    n += s.size();
    if (s.size() > static_cast<std::size_t>(max_lag) + 1) long_enough = true;
  }
  if (!long_enough) throw Error(ErrorKind::Argument, "series length must exceed max_lag + 1");
  const double mean = sum / static_cast<double>(n);
  std::vector<double> acov(static_cast<std::size_t>(max_lag) + 1, 0.0);
  for (const auto& s : series) {
    for (int lag = 0; lag <= max_lag; ++lag) {
      for (std::size_t t = static_cast<std::size_t>(lag); t < s.size(); ++t) {
        acov[lag] += (s[t] - mean) * (s[t - lag] - mean);
      }
    }
  }
  for (double& a : acov) a /= static_cast<double>(n);
  if (acov[0] <= 1e-20 * (1.0 + mean * mean)) {
    throw Error(ErrorKind::UndefinedCorrelation, "series has zero variance");
  }
  return durbin_levinson(acov, max_lag);
}

}  // namespace etcsim
