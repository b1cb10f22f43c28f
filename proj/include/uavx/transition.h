#pragma once

#include <vector>

#include "uavx/worldsim.h"

namespace uavx {

// One environment step as stored in replay. States are flattened network
// inputs; terminal transitions still carry a well-formed next_state.
struct Transition {
  std::vector<double> state;
  world::ActionId action;
  double reward = 0.0;
  std::vector<double> next_state;
  bool terminal = false;
};

}  // namespace uavx
