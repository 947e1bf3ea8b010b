#include "vdkflow/al.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "vdkflow/errors.hpp"

namespace vdkflow {

namespace {

// Cross-covariance contribution of one active NNK between a standardized
// query and every design column.
Eigen::VectorXd nnk_cross(const GpModel& m, int active_idx, const Eigen::VectorXd& s_std) {
  const auto& coords = m.kernel.nnks[m.kernel.active[active_idx]].coords;
  const auto& h = m.kernel.hypers[active_idx];
  const double a2 = h.amplitude * h.amplitude;
  const double inv = 1.0 / (2.0 * h.lengthscale * h.lengthscale);
  const int n = m.size();
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    double d = 0.0;
    for (int c : coords) {
      const double diff = s_std[c] - m.design(c, i);
      d += diff * diff;
    }
    out[i] = a2 * std::exp(-inv * d);
  }
  return out;
}

double total_amplitude_sq(const GpModel& m) {
  double v = 0.0;
  for (const auto& h : m.kernel.hypers) v += h.amplitude * h.amplitude;
  return v;
}

// Predictive variance in standardized units from an assembled cross vector.
double var_from_cross(const GpModel& m, double prior, const Eigen::VectorXd& k) {
  const Eigen::VectorXd v = m.chol.triangularView<Eigen::Lower>().solve(k);
  return prior - v.squaredNorm();
}

}  // namespace

double predictive_sigma(const GpModel& model, const Eigen::VectorXd& raw_s) {
  return std::sqrt(predict_var(model, raw_s));
}

InjectionSample swipe(const GpModel& model, const LayerDecomposition& layers,
                      const InjectionSample& incumbent, const InjectionBox& box,
                      const SwipeOptions& opts) {
  const int dim = static_cast<int>(model.design.rows());
  Eigen::VectorXd x_raw = flatten(incumbent);
  if (x_raw.size() != dim)
    throw DimensionMismatch("incumbent has " + std::to_string(x_raw.size()) +
                            " coordinates, model expects " + std::to_string(dim));
  if (box.lo.size() != dim || box.hi.size() != dim)
    throw DimensionMismatch("box does not match model dimension");
  for (int c = 0; c < dim; ++c) {
    if (x_raw[c] < box.lo[c] - 1e-9 || x_raw[c] > box.hi[c] + 1e-9)
      throw InvalidArgument("incumbent lies outside the sampling box at coordinate " +
                            std::to_string(c));
  }
  if (opts.batch < 1) throw InvalidArgument("swipe batch must be positive");

  std::mt19937_64 rng(opts.seed);
  const int na = static_cast<int>(model.kernel.active.size());
  const double prior = total_amplitude_sq(model);

  Eigen::VectorXd s_std = model.in_std.apply(x_raw);
  std::vector<Eigen::VectorXd> kparts(na);
  Eigen::VectorXd k_total = Eigen::VectorXd::Zero(model.size());
  for (int a = 0; a < na; ++a) {
    kparts[a] = nnk_cross(model, a, s_std);
    k_total += kparts[a];
  }
  double cur_var = var_from_cross(model, prior, k_total);

  Eigen::VectorXd scratch = s_std;
  for (int li = 0; li < layers.depth(); ++li) {
    const std::vector<int>& cset = layers.unique_vars[li];
    if (cset.empty()) continue;  // no load coordinates at this depth

    std::vector<int> touched;
    for (int a = 0; a < na; ++a) {
      const auto& coords = model.kernel.nnks[model.kernel.active[a]].coords;
      bool hit = false;
      for (int c : cset) {
        if (std::binary_search(coords.begin(), coords.end(), c)) {
          hit = true;
          break;
        }
      }
      if (hit) touched.push_back(a);
    }
    if (touched.empty()) continue;

    Eigen::VectorXd k_fixed = k_total;
    for (int a : touched) k_fixed -= kparts[a];

    // The current block values compete as an implicit candidate, so the
    // tracked variance cannot decrease.
    double best_var = cur_var;
    bool improved = false;
    Eigen::VectorXd best_raw(cset.size()), best_std(cset.size());
    std::vector<Eigen::VectorXd> best_parts;
    Eigen::VectorXd best_total;

    for (int cand = 0; cand < opts.batch; ++cand) {
      scratch = s_std;
      Eigen::VectorXd craw(cset.size()), cstd(cset.size());
      for (std::size_t j = 0; j < cset.size(); ++j) {
        const int c = cset[j];
        const double u = detail::unit_uniform(rng);
        craw[j] = box.lo[c] + u * (box.hi[c] - box.lo[c]);
        cstd[j] = (craw[j] - model.in_std.center[c]) / model.in_std.halfwidth[c];
        scratch[c] = cstd[j];
      }
      Eigen::VectorXd k_cand = k_fixed;
      std::vector<Eigen::VectorXd> parts(touched.size());
      for (std::size_t t = 0; t < touched.size(); ++t) {
        parts[t] = nnk_cross(model, touched[t], scratch);
        k_cand += parts[t];
      }
      const double v = var_from_cross(model, prior, k_cand);
      if (v > best_var) {
        best_var = v;
        improved = true;
        best_raw = craw;
        best_std = cstd;
        best_parts = std::move(parts);
        best_total = k_cand;
      }
    }

    if (improved) {
      for (std::size_t j = 0; j < cset.size(); ++j) {
        x_raw[cset[j]] = best_raw[j];
        s_std[cset[j]] = best_std[j];
      }
      for (std::size_t t = 0; t < touched.size(); ++t) kparts[touched[t]] = best_parts[t];
      k_total = best_total;
      cur_var = best_var;
    }
  }

  const int nb = dim / 2;
  InjectionSample out;
  out.p = x_raw.head(nb);
  out.q = x_raw.tail(nb);
  out.distribution = incumbent.distribution;
  out.hypercube_fraction = incumbent.hypercube_fraction;
  out.seed = opts.seed;
  return out;
}

std::pair<GpModel, AlHistory> run_al(const Network& net, int target, int budget,
                                     const AlOptions& opts) {
  using clock = std::chrono::steady_clock;
  if (budget < 2) throw InvalidArgument("active-learning budget must be at least 2");
  if (target < 0 || target >= net.size())
    throw IndexOutOfRange("target bus index " + std::to_string(target));
  if (net.buses[target].kind != BusKind::pq)
    throw InvalidArgument("target bus " + std::to_string(net.buses[target].id) +
                          " is not a PQ bus; its voltage magnitude is pinned");

  const LayerDecomposition layers = build_layers(net, target);
  for (int li = 0; li < layers.depth(); ++li) {
    if (layers.unique_vars[li].empty())
      std::fprintf(stderr, "[al] depth %d of target bus %d has no load coordinates; skipped\n",
                   li + 1, net.buses[target].id);
  }
  const InjectionBox box = hypercube_box(net, opts.fraction);

  VdkStructure kernel = build_vdk(net);
  kernel = reduce_vdk(kernel);

  std::mt19937_64 rng(opts.seed);
  AlHistory hist;

  // Labeling oracle with the redraw policy: a non-convergent sample is
  // replaced by a fresh random one, up to max_redraws, then the failure
  // propagates.
  auto label = [&](InjectionSample& s) -> double {
    for (int attempt = 0;; ++attempt) {
      try {
        ++hist.solver_calls;
        return solve_acpf(net, s, opts.solve).v_mag[target];
      } catch (const NonConvergence&) {
        if (attempt >= opts.max_redraws) throw;
        ++hist.redraws;
        std::fprintf(stderr, "[al] oracle did not converge; redrawing sample (%d/%d)\n",
                     attempt + 1, opts.max_redraws);
        s = sample_hypercube(net, opts.fraction, 1, opts.dist, rng())[0];
      }
    }
  };

  InjectionSample incumbent = sample_hypercube(net, opts.fraction, 1, opts.dist, rng())[0];
  const double v0 = label(incumbent);

  FitOptions fo = opts.fit;
  fo.box = box;
  Eigen::MatrixXd x0 = flatten(incumbent);
  Eigen::VectorXd y0(1);
  y0[0] = v0;
  GpModel model = detail::assemble(x0, y0, kernel, fo);

  const int n_probe = static_cast<int>(opts.probe_inputs.cols());
  if (n_probe > 0 && opts.probe_targets.size() != n_probe)
    throw DimensionMismatch("probe inputs/targets count mismatch");

  for (int t = 1; t < budget; ++t) {
    const auto t_start = clock::now();
    AlRecord rec;

    InjectionSample chosen = incumbent;
    for (int s = 0; s < opts.swipes_per_iter; ++s)
      chosen = swipe(model, layers, chosen, box, SwipeOptions{opts.batch, rng()});

    rec.sigma = predictive_sigma(model, flatten(chosen));
    rec.label = label(chosen);  // may replace `chosen` via the redraw policy
    rec.chosen = chosen;
    update(model, flatten(chosen), rec.label);

    if (opts.retune_every > 0 && t % opts.retune_every == 0) {
      // Restart the reduced ascent from the documented initialization. Warm
      // continuation across retunes lets the tiny-sample optimum (most
      // amplitudes at zero, lengthscales unbounded) persist long after the
      // data would support a healthy kernel; a restart costs the same budget
      // and keeps every retune independent of the early-loop state.
      reset_hypers(model.kernel);
      retune(model, opts.retune_iters);
      rec.retuned = true;
    }

    if (n_probe > 0) {
      double abs_sum = 0.0, abs_max = 0.0, var_max = 0.0;
      for (int i = 0; i < n_probe; ++i) {
        const Eigen::VectorXd s = opts.probe_inputs.col(i);
        const double err = std::fabs(predict_mean(model, s) - opts.probe_targets[i]);
        abs_sum += err;
        abs_max = std::max(abs_max, err);
        var_max = std::max(var_max, predict_var(model, s));
      }
      rec.mae = abs_sum / n_probe;
      rec.me = abs_max;
      rec.mpv = var_max;
    }

    rec.wall_s = std::chrono::duration<double>(clock::now() - t_start).count();
    hist.records.push_back(std::move(rec));
    incumbent = chosen;
  }

  // The in-loop retunes run on a reduced budget; give the returned model one
  // ascent at the full fit budget over the completed training set. Skipped
  // when re-tuning is disabled so that a no-retune run really returns the
  // initial hyperparameters untouched.
  if (opts.retune_every > 0) {
    reset_hypers(model.kernel);
    retune(model, opts.fit.iters);
  }
  return {std::move(model), std::move(hist)};
}

}  // namespace vdkflow
