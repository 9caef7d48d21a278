/**
 * @file optim.hpp
 * @brief Small derivative-free optimisers used by the likelihood fits.
 */
#pragma once

#include <functional>
#include <optional>
#include <vector>

namespace etcsim::optim {

using Objective = std::function<double(const std::vector<double>&)>;

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;
};

struct NelderMeadOptions {
  int max_evals = 4000;
  double ftol = 1e-10;            ///< spread of simplex values at convergence
  double xtol = 1e-10;            ///< simplex diameter at convergence
  std::optional<Box> bounds;      ///< trial points are projected onto the box
};

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int evals = 0;
  bool converged = false;
};

/// Minimises `f` from `x0` with initial per-coordinate steps `step`.
/// Non-finite objective values are treated as +inf.
MinimizeResult nelder_mead(const Objective& f, std::vector<double> x0, std::vector<double> step,
                           const NelderMeadOptions& options = {});

/// Brent minimisation of a scalar function on [lo, hi].
MinimizeResult brent_minimize(const std::function<double(double)>& f, double lo, double hi,
                              int bits = 40, int max_iter = 200);

}  // namespace etcsim::optim
