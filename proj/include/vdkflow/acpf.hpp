#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vdkflow/grid.hpp"

namespace vdkflow {

// Distribution used when drawing injection samples inside a hypercube.
enum class SampleDist { uniform, normal, beta };

SampleDist parse_dist(const std::string& name);
std::string dist_name(SampleDist dist);

// One net-injection operating point in per-unit. Entries follow bus order of
// the Network: p[i], q[i] are net injections (generation minus load) at bus i.
// Buses without load keep their base entries exactly; only load-bus entries
// are perturbed by the samplers.
struct InjectionSample {
  Eigen::VectorXd p;
  Eigen::VectorXd q;
  SampleDist distribution = SampleDist::uniform;
  double hypercube_fraction = 0.0;
  std::uint64_t seed = 0;
};

// Axis-aligned box in injection space; lo/hi are stacked [p; q] vectors.
struct InjectionBox {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

struct SolveOptions {
  double tol = 1e-8;        // per-unit power mismatch tolerance
  int max_iter = 30;        // Newton iteration cap
  bool flat_start = false;  // start from setpoint magnitudes / zero angles
                            // instead of the stored base-case profile
  bool enforce_q_limits = false;  // iterate PV->PQ switching on finite limits
};

struct PowerFlowSolution {
  Eigen::VectorXd v_mag;  // per-unit magnitudes, bus order
  Eigen::VectorXd v_ang;  // radians, rotated so the slack angle is zero
  int iterations = 0;
  double max_mismatch = 0.0;
};

// Net injections implied by the case data: (gen - load)/base_mva per bus.
InjectionSample base_injection(const Network& net);

// Hypercube [(1-fraction)*base, (1+fraction)*base] per load-bus entry of the
// stacked [p; q] injection vector (elementwise min/max, so negative bases are
// handled); non-load entries are degenerate (lo = hi = base).
InjectionBox hypercube_box(const Network& net, double fraction);

// Stack a sample as [p; q] / split a stacked vector back into a sample.
Eigen::VectorXd flatten(const InjectionSample& s);
InjectionSample unflatten(const Network& net, const Eigen::VectorXd& x);

// Draw n samples inside the hypercube. `uniform` fills the box uniformly;
// `normal` is a truncated Gaussian centered at the base point with sigma of
// one third of the half-width; `beta` is Beta(2,5) rescaled onto the box.
// Deterministic for a fixed seed. Throws NoLoadBuses when nothing can vary.
std::vector<InjectionSample> sample_hypercube(const Network& net, double fraction, int n,
                                              SampleDist dist, std::uint64_t seed);

// Full Newton-Raphson on the polar mismatch equations. PV buses hold their
// magnitude setpoint, the slack holds magnitude and angle; P is matched at
// every non-slack bus and Q at every PQ bus. Throws NonConvergence or
// SingularJacobian on failure.
PowerFlowSolution solve_acpf(const Network& net, const InjectionSample& s,
                             const SolveOptions& opts = {});

// Largest per-bus complex power mismatch |S_spec - S_calc| of a solution,
// evaluated independently of the solver's internal residual bookkeeping.
double mismatch_residual(const Network& net, const InjectionSample& s,
                         const PowerFlowSolution& sol);

// Labeled training pair: injection sample plus the solved target-bus voltage.
struct LabeledSample {
  InjectionSample input;
  double v_target = 0.0;
};

struct LabelOptions {
  SolveOptions solve;
  double max_failure_ratio = 0.2;  // abort when more samples than this fail
};

// Solve every sample and record v_mag at target_bus (an internal bus index,
// which must be a PQ bus). Non-convergent samples are dropped with a warning;
// exceeding max_failure_ratio throws TooManyFailures.
std::vector<LabeledSample> label_samples(const Network& net,
                                         const std::vector<InjectionSample>& samples,
                                         int target_bus, const LabelOptions& opts = {});

namespace detail {

// The canonical uniform draw on [0,1) used by every sampler in this library
// (fixed bit mapping, so streams are reproducible across standard libraries).
double unit_uniform(std::mt19937_64& rng);

// Reduced mismatch vector [spec - calc: P rows at non-slack buses; Q rows at
// PQ buses] for a given voltage phasor state, and the Jacobian of the
// CALCULATED injections with respect to the reduced state [theta at
// non-slack; |v| at PQ] (so the Newton step is dx = J^-1 mismatch, and the
// mismatch derivative is its negative). Exposed for derivative checks.
Eigen::VectorXd reduced_mismatch(const Network& net, const Eigen::VectorXd& p_spec,
                                 const Eigen::VectorXd& q_spec, const Eigen::VectorXcd& v);
Eigen::SparseMatrix<double> reduced_jacobian(const Network& net, const Eigen::VectorXcd& v);

// Apply a reduced-state perturbation to a voltage vector (angles at non-slack
// buses, magnitudes at PQ buses).
Eigen::VectorXcd reduced_state_voltage(const Network& net, const Eigen::VectorXcd& v,
                                       const Eigen::VectorXd& delta);

}  // namespace detail

}  // namespace vdkflow
