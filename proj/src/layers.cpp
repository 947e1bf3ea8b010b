#include "vdkflow/layers.hpp"

#include <algorithm>

#include "vdkflow/errors.hpp"

namespace vdkflow {

LayerDecomposition build_layers(const Network& net, int target) {
  const int nb = net.size();
  if (target < 0 || target >= nb)
    throw IndexOutOfRange("layer target bus index " + std::to_string(target));

  LayerDecomposition out;
  out.target = target;

  std::vector<bool> seen(nb, false);
  seen[target] = true;
  out.layers.push_back({target});
  for (;;) {
    std::vector<int> next;
    for (int u : out.layers.back()) {
      for (int w : net.adjacency[u]) {
        if (!seen[w]) {
          seen[w] = true;
          next.push_back(w);
        }
      }
    }
    if (next.empty()) break;
    std::sort(next.begin(), next.end());
    out.layers.push_back(std::move(next));
  }

  // Varying coordinates: p and q of load buses (the slack's injections are
  // solver outputs, never sampled).
  std::vector<bool> varying(2 * nb, false);
  for (int i : net.load_bus_indices) {
    if (i == net.slack) continue;
    varying[i] = true;
    varying[nb + i] = true;
  }

  // First appearance of each varying coordinate while walking the sub-kernel
  // supports outward: the NNK of bus b covers the closed neighborhood of b,
  // so depth i sees the coordinates of layers i-1, i and i+1.
  std::vector<bool> assigned(2 * nb, false);
  out.unique_vars.resize(out.layers.size());
  for (std::size_t d = 0; d < out.layers.size(); ++d) {
    std::vector<int>& vars = out.unique_vars[d];
    for (int b : out.layers[d]) {
      for (int j : neighborhood(net, b)) {
        for (int c : {j, nb + j}) {
          if (varying[c] && !assigned[c]) {
            assigned[c] = true;
            vars.push_back(c);
          }
        }
      }
    }
    std::sort(vars.begin(), vars.end());
  }
  return out;
}

}  // namespace vdkflow
