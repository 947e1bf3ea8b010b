#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vdkflow/grid.hpp"
#include "vdkflow/layers.hpp"

namespace vdkflow {

// One node-neighborhood sub-kernel: a squared-exponential kernel acting on
// the p/q coordinates of its owner bus and the owner's graph neighbors.
// Coordinates index the stacked injection vector [p_0..p_{n-1}; q_0..q_{n-1}].
// Buses that never vary (no load) keep their coordinates in the set — they
// contribute exactly zero to every distance, and keeping them preserves the
// published reduction counts, which are a property of the graph alone.
struct NnkDescriptor {
  int owner_bus = -1;        // internal bus index; -1 for the full kernel
  std::vector<int> coords;   // sorted, unique
  bool redundant = false;    // excluded from `active` by reduce_vdk
};

struct NnkHypers {
  double amplitude = 1.0;
  double lengthscale = 1.0;
};

// Additive vertex-degree kernel: k(s, s') = sum over active NNKs of their
// squared-exponential values on the corresponding coordinate slices.
struct VdkStructure {
  std::vector<NnkDescriptor> nnks;  // one per bus (or a single full kernel)
  std::vector<int> active;          // ascending indices of non-redundant NNKs
  std::vector<NnkHypers> hypers;    // parallel to `active`
};

// amplitude^2 * exp(-|x - y|^2 / (2 * lengthscale^2)).
double se_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double amplitude,
                 double lengthscale);

// Reset hyperparameters to their documented starting point: amplitude
// 1/sqrt(#active), lengthscale max(1, sqrt(dim/3)). Used when a structure is
// (re)built and by ascent restarts that must not inherit a degenerate state.
void reset_hypers(VdkStructure& v);

// One NNK per bus over the closed neighborhood's p/q coordinates; every NNK
// active; hyperparameters at their initial values (amplitude 1/sqrt(#active),
// lengthscale max(1, sqrt(dim/3)) so the initial exponent is O(1)).
VdkStructure build_vdk(const Network& net);

// Single squared-exponential kernel over all 2|B| coordinates (baseline).
VdkStructure full_kernel(const Network& net);

// Mark every NNK whose coordinate set is a proper subset of another's as
// redundant; among identical sets the lowest owner index survives. Amplitudes
// are re-initialized to 1/sqrt(#active). Idempotent.
[[nodiscard]] VdkStructure reduce_vdk(const VdkStructure& v);

// Keep only active NNKs owned by buses within the first `depth` layers.
// Hyperparameters of retained NNKs are carried over. Throws DepthOutOfRange
// unless 1 <= depth <= layers.depth().
VdkStructure truncate_vdk(const VdkStructure& v, const LayerDecomposition& layers, int depth);

// Kernel value between two stacked injection vectors.
double eval_vdk(const VdkStructure& v, const Eigen::VectorXd& s1, const Eigen::VectorXd& s2);

// Gram matrix over a design matrix whose COLUMNS are samples; exact symmetry
// is enforced by construction.
Eigen::MatrixXd gram(const VdkStructure& v, const Eigen::MatrixXd& design);

// JSON dump of the structure (owner, coords, redundant, hypers) for
// inspection and for size checks against published reduction counts.
std::string dump_vdk_json(const VdkStructure& v);

}  // namespace vdkflow
