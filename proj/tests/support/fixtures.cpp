#include "fixtures.hpp"

#include "synthetic.hpp"

namespace etcsim::testing {

const Catalog& toy_catalog() {
  static const Catalog c = make_synthetic_catalog({}, 1);
  return c;
}

const ModelBundle& toy_bundle() {
  static const ModelBundle b = fit_all(toy_catalog());
  return b;
}

const Simulator& toy_simulator() {
  static const Simulator s(toy_bundle());
  return s;
}

}  // namespace etcsim::testing
