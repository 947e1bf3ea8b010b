#pragma once

#include <vector>

#include "vdkflow/grid.hpp"

namespace vdkflow {

// Breadth-first layer decomposition of the grid around a target bus, plus the
// injection coordinates that first become relevant at each depth.
//
// layers[0] = {target}; layers[i] = buses at graph distance i. unique_vars[i]
// lists the varying (load-bus) p/q coordinate indices into the stacked [p; q]
// injection vector that first appear at depth i when walking the sub-kernel
// supports outward: depth 0 covers the target and its neighbors, each later
// depth contributes the next ring's coordinates. Layers whose variable set is
// empty contribute nothing to the sweep and are skipped by callers.
struct LayerDecomposition {
  int target = 0;
  std::vector<std::vector<int>> layers;
  std::vector<std::vector<int>> unique_vars;

  int depth() const { return static_cast<int>(layers.size()); }
};

// BFS from `target` over the adjacency structure. Throws IndexOutOfRange for
// an invalid target. Buses unreachable from the target are absent (connected
// networks partition completely).
LayerDecomposition build_layers(const Network& net, int target);

}  // namespace vdkflow
