// Tuple layouts shared by fitting and simulation.
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "etcsim/engine.hpp"

namespace etcsim::detail {

KdeOptions genesis_options(double scale);
KdeOptions bearing_options(int order, double scale);
KdeOptions speed_options(int order, double scale);
KdeOptions vorticity_options(int order, double scale);

/// theta values unwrapped relative to the last one, which stays in [-pi, pi).
std::vector<double> unwrap_relative(const std::vector<double>& theta);

/// Nearest cell (by great-circle distance between centres) among `candidates`
/// for every active cell; ties go to the lower flat index.
std::vector<int> nearest_source(const GridSpec& grid, const std::vector<int>& active,
                                const std::vector<char>& has_model);

}  // namespace etcsim::detail
