// Shared fitted models for tests that need a realistic bundle. Built once per
// process on first use.
#pragma once

#include "etcsim/catalog.hpp"
#include "etcsim/engine.hpp"

namespace etcsim::testing {

/// 1000-storm synthetic catalog (seed 1).
const Catalog& toy_catalog();
/// fit_all(toy_catalog()) with default configuration.
const ModelBundle& toy_bundle();
const Simulator& toy_simulator();

}  // namespace etcsim::testing
