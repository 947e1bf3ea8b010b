#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "vdkflow/acpf.hpp"
#include "vdkflow/kernels.hpp"

namespace vdkflow {

// Per-coordinate affine map onto [-1, 1] over a training box. Coordinates
// with zero half-width (fixed injections) pass through centered, scale 1.
struct InputStandardizer {
  Eigen::VectorXd center;
  Eigen::VectorXd halfwidth;

  static InputStandardizer from_box(const InjectionBox& box);
  static InputStandardizer from_columns(const Eigen::MatrixXd& raw_cols);

  Eigen::VectorXd apply(const Eigen::VectorXd& raw) const;
  Eigen::MatrixXd apply_columns(const Eigen::MatrixXd& raw_cols) const;
};

// Center targets by the training mean, scale by the training standard
// deviation (falls back to 1 for constant targets).
struct OutputStandardizer {
  double mean = 0.0;
  double scale = 1.0;

  static OutputStandardizer from_targets(const Eigen::VectorXd& raw);

  double apply(double raw) const { return (raw - mean) / scale; }
  double invert(double standardized) const { return mean + scale * standardized; }
};

struct FitOptions {
  double lr = 0.1;    // adaptive-gradient learning rate in log-space
  int iters = 200;    // fixed ascent budget, no early stopping
  double noise = 1e-8;  // jitter floor sigma_n^2 (escalates x10 to 1e-4)
  bool learn_noise = false;
  // Standardization box; when absent the per-coordinate min/max of the
  // training inputs is used.
  std::optional<InjectionBox> box;
};

// Exact GP with an additive VDK (or full) kernel. Inputs and targets are
// stored standardized; predictions are de-standardized on output.
struct GpModel {
  VdkStructure kernel;       // hypers hold the fitted values
  Eigen::MatrixXd design;    // standardized inputs, columns = samples
  Eigen::VectorXd targets;   // standardized labels
  double noise = 1e-8;       // sigma_n^2 actually used (after escalation)
  Eigen::MatrixXd chol;      // lower-triangular L with L L^T = K + noise I
  Eigen::VectorXd alpha;     // (K + noise I)^{-1} targets
  InputStandardizer in_std;
  OutputStandardizer out_std;
  FitOptions opts;

  // Cached per-active-NNK squared-distance matrices over the design columns.
  std::vector<Eigen::MatrixXd> sqdists;

  mutable std::int64_t var_clamp_events = 0;

  int size() const { return static_cast<int>(targets.size()); }
};

// Assemble and MLE-fit a model on raw training pairs. Hyperparameters ascend
// the log marginal likelihood by adaptive gradient (accumulated squared
// gradient) in log-space, starting from the kernel's stored values.
GpModel fit(const Eigen::MatrixXd& raw_inputs_cols, const Eigen::VectorXd& raw_targets,
            const VdkStructure& kernel, const FitOptions& opts = {});

// LML = -1/2 V^T alpha - sum log diag(chol) - n/2 log(2 pi), standardized units.
double log_marginal_likelihood(const GpModel& m);

// Gradient of the LML in log-hyperparameter space, interleaved per active NNK
// as [d/dlog a_0, d/dlog l_0, d/dlog a_1, ...]; when opts.learn_noise is set
// the derivative with respect to log sigma_n^2 is appended.
Eigen::VectorXd lml_gradient(const GpModel& m);

// Predictions at a raw (unstandardized) injection vector.
double predict_mean(const GpModel& m, const Eigen::VectorXd& raw_s);
double predict_var(const GpModel& m, const Eigen::VectorXd& raw_s);  // pu^2, clamped at 0

// Append one raw training pair, extending the Cholesky factor by one bordered
// row (no full refactorization on the happy path).
void update(GpModel& m, const Eigen::VectorXd& raw_s, double raw_target);

// Re-run the hyperparameter ascent on the current training set (used by the
// active-learning retune policy).
void retune(GpModel& m, int iters);

// 1/2 log det(I + K_A / noise) over a standardized design (columns=samples);
// zero columns -> 0 by convention.
double information_gain(const VdkStructure& kernel, const Eigen::MatrixXd& design_cols,
                        double noise);

// Versioned JSON model file: kernel structure + hyperparameters, standardized
// design and targets, standardizers and fit options. The Cholesky factor is
// rebuilt on load, so a round trip reproduces predictions exactly.
void save_model(const std::string& path, const GpModel& m);
GpModel load_model(const std::string& path);

namespace detail {

// Rebuild Gram, Cholesky and alpha from the model's cached state, escalating
// jitter on factorization failure. Exposed for tests.
void refresh(GpModel& m);

// Assemble a model (standardizers, caches, factorization) without running the
// hyperparameter ascent and without fit()'s minimum-size requirement; the
// active-learning loop seeds itself from a single labeled sample.
GpModel assemble(const Eigen::MatrixXd& raw_inputs_cols, const Eigen::VectorXd& raw_targets,
                 const VdkStructure& kernel, const FitOptions& opts);

}  // namespace detail

}  // namespace vdkflow
