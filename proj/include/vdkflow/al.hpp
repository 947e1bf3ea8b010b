#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vdkflow/acpf.hpp"
#include "vdkflow/gp.hpp"
#include "vdkflow/kernels.hpp"
#include "vdkflow/layers.hpp"

namespace vdkflow {

struct SwipeOptions {
  int batch = 100;          // random candidates per layer (incumbent always added)
  std::uint64_t seed = 0;
};

struct AlOptions {
  int swipes_per_iter = 3;
  int batch = 100;
  int retune_every = 1;     // hyperparameter re-tune period in iterations; <= 0 never
  int retune_iters = 25;    // reduced ascent budget during the loop
  int max_redraws = 5;      // replacement draws when the oracle fails to converge
  double fraction = 0.10;   // sampling hypercube half-width fraction
  SampleDist dist = SampleDist::uniform;  // initial-sample distribution
  std::uint64_t seed = 0;
  FitOptions fit;           // noise / learning-rate settings for the model
  SolveOptions solve;       // labeling-oracle settings
  // Optional held-out probe set (raw stacked injections, columns = samples).
  // When non-empty, per-iteration MAE/ME/MPV are recorded in the history.
  Eigen::MatrixXd probe_inputs;
  Eigen::VectorXd probe_targets;
};

struct AlRecord {
  InjectionSample chosen;
  double sigma = 0.0;       // predictive standard deviation at the choice, pu
  double label = 0.0;       // oracle voltage magnitude, pu
  double mae = 0.0;         // probe metrics; zero when no probe set is given
  double me = 0.0;
  double mpv = 0.0;         // maximum predictive variance over the probe set
  bool retuned = false;
  double wall_s = 0.0;
};

struct AlHistory {
  std::vector<AlRecord> records;  // one per iteration after the initial sample
  int solver_calls = 0;           // every power-flow invocation, including failed ones
  int redraws = 0;
};

// One network swipe: walk the layers outward from the target, and per layer
// maximize the model's predictive standard deviation over `batch` random
// candidates for that layer's coordinates (plus the current working values,
// so the tracked sigma never decreases across layers). Layers that contribute
// no load coordinates are skipped. The incumbent provides the not-yet-updated
// coordinates; it must lie inside the box.
InjectionSample swipe(const GpModel& model, const LayerDecomposition& layers,
                      const InjectionSample& incumbent, const InjectionBox& box,
                      const SwipeOptions& opts);

// σ_f at a raw stacked injection (convenience used by swipe callers/tests).
double predictive_sigma(const GpModel& model, const Eigen::VectorXd& raw_s);

// Active-learning outer loop: seed the model with one random labeled sample,
// then for each of the remaining budget-1 iterations run consecutive swipes,
// label the winning sample with the power-flow oracle, fold it into the model
// by a rank-one update, and periodically re-tune hyperparameters. Each
// re-tune restarts the reduced-budget ascent from the kernel initialization
// (continuing from the previous optimum would freeze the degenerate
// few-sample solution in place), and the returned model gets one ascent at
// the full fit budget; with retune_every <= 0 the hyperparameters stay at
// their initial values throughout. Exactly `budget` oracle solves happen
// when every solve converges.
std::pair<GpModel, AlHistory> run_al(const Network& net, int target, int budget,
                                     const AlOptions& opts = {});

}  // namespace vdkflow
