#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vdkflow/acpf.hpp"
#include "vdkflow/al.hpp"
#include "vdkflow/gp.hpp"
#include "vdkflow/kernels.hpp"

namespace vdkflow {

enum class Method { full_gp, vdk_gp, vdk_al };
enum class KernelVariant { full, vdk, vdk_reduced, vdk_depth };

std::string method_name(Method m);
std::string variant_name(KernelVariant v);

struct Metrics {
  double mae = 0.0;  // mean absolute error, pu
  double me = 0.0;   // maximum absolute error, pu
  double mpv = 0.0;  // maximum predictive variance, pu^2
};

// MAE/ME over |preds - truths|; MPV = max of vars. Lengths must match and be
// nonzero (vars may be empty, in which case mpv = 0).
Metrics metrics(const std::vector<double>& preds, const std::vector<double>& truths,
                const std::vector<double>& vars);

struct TrialResult {
  std::string case_id;
  int target_bus = 0;  // external bus number
  Method method = Method::vdk_gp;
  KernelVariant variant = KernelVariant::vdk_reduced;
  int trial = 0;
  std::uint64_t seed = 0;
  int n_train = 0;
  int n_test = 0;
  double fraction = 0.0;
  Metrics m;
  double wall_s = 0.0;
};

struct ExperimentConfig {
  std::string case_path;
  int target_bus = 1;        // external bus number
  double fraction = 0.10;
  int n_train = 100;
  int n_test = 1000;
  int n_trials = 20;
  Method method = Method::vdk_gp;
  KernelVariant variant = KernelVariant::vdk_reduced;
  int depth = 0;             // used when variant == vdk_depth
  SampleDist train_dist = SampleDist::uniform;
  SampleDist test_dist = SampleDist::uniform;
  AlOptions al;              // consulted when method == vdk_al
  FitOptions fit;
  SolveOptions solve;
  std::uint64_t master_seed = 0;
  std::string out_path;      // empty: no CSV written
};

// Counter-hash scheme deriving independent per-purpose seeds from one master
// seed (SplitMix64 of master + counter); every emitted row records its seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter);

// Fixed CSV schema shared by every experiment writer.
extern const char* const kCsvHeader;  // case,target,method,variant,trial,...
std::string csv_row(const TrialResult& r);
void write_csv(const std::string& path, const std::vector<TrialResult>& rows);

// Independent random train/test trials: per trial, sample + label both sets
// with derived seeds, fit (or run active learning), evaluate on the test set.
// Trials run on a small worker pool; rows come back in trial order.
std::vector<TrialResult> run_trials(const ExperimentConfig& cfg);

// Fraction of test samples whose absolute error exceeds c standard deviations
// of the model's own predictive belief, for c = 1, 2, 3.
struct CoverageResult {
  double outside_1 = 0.0;
  double outside_2 = 0.0;
  double outside_3 = 0.0;
};
CoverageResult coverage_study(const GpModel& model, const std::vector<LabeledSample>& test);
// Same bands from precomputed absolute errors and standard deviations.
CoverageResult coverage_from(const std::vector<double>& abs_err,
                             const std::vector<double>& sigma);

// MAE of one fixed model evaluated on progressively wider sampling boxes.
struct ExtrapolationPoint {
  double fraction = 0.0;
  Metrics m;
  int n_test = 0;
};
std::vector<ExtrapolationPoint> extrapolation_study(const GpModel& model, const Network& net,
                                                    int target, double train_fraction,
                                                    const std::vector<double>& test_fractions,
                                                    int n_test, std::uint64_t seed,
                                                    const SolveOptions& solve = {});

// One model per kernel truncation depth on a fixed training set.
struct DepthPoint {
  int depth = 0;
  int n_active = 0;
  Metrics m;
};
std::vector<DepthPoint> depth_study(const Network& net, int target,
                                    const std::vector<int>& depths,
                                    const ExperimentConfig& cfg);

// Gaussian kernel density estimate on a fixed evaluation grid (Silverman's
// bandwidth). Throws DegenerateDensity when the sample carries no spread.
struct DensityEstimate {
  Eigen::VectorXd grid;
  Eigen::VectorXd density;  // integrates to 1 over the grid (trapezoid rule)
  double bandwidth = 0.0;
};
DensityEstimate kde(const std::vector<double>& values, const Eigen::VectorXd& grid);

// KL(p || q) of two densities tabulated on one shared grid, in nats.
double kl_divergence(const DensityEstimate& p, const DensityEstimate& q);

// Train-once / test-under-shift uncertainty quantification: density of the
// model's predictions vs density of the true voltages for each test
// distribution, plus the KL divergence between them.
struct UqResult {
  SampleDist distribution = SampleDist::uniform;
  DensityEstimate truth;
  DensityEstimate predicted;
  double kl = 0.0;
};
std::vector<UqResult> uq_study(const GpModel& model, const Network& net, int target,
                               double fraction, const std::vector<SampleDist>& dists,
                               int n_test, std::uint64_t seed,
                               const SolveOptions& solve = {});

}  // namespace vdkflow
