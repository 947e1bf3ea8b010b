#include "vdkflow/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numbers>
#include <thread>

#include "vdkflow/errors.hpp"
#include "vdkflow/layers.hpp"

namespace vdkflow {

namespace {

using clock_type = std::chrono::steady_clock;

double elapsed_s(clock_type::time_point from) {
  return std::chrono::duration<double>(clock_type::now() - from).count();
}

// Robust Silverman bandwidth: 0.9 min(sd, IQR/1.349) n^{-1/5}, with the IQR
// term dropped when it degenerates (heavily tied samples).
double silverman_bandwidth(const std::vector<double>& values) {
  const int n = static_cast<int>(values.size());
  if (n < 2) throw EmptyInput("bandwidth needs at least 2 values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1));

  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * (n - 1);
    const int i = static_cast<int>(pos);
    const double f = pos - i;
    return i + 1 < n ? sorted[i] * (1.0 - f) + sorted[i + 1] * f : sorted[n - 1];
  };
  const double iqr = quantile(0.75) - quantile(0.25);

  double spread = sd;
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.349);
  if (!(spread > 0.0)) throw DegenerateDensity();
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

double trapezoid(const Eigen::VectorXd& grid, const Eigen::VectorXd& f) {
  double acc = 0.0;
  for (int i = 0; i + 1 < grid.size(); ++i)
    acc += 0.5 * (f[i] + f[i + 1]) * (grid[i + 1] - grid[i]);
  return acc;
}

void predict_set(const GpModel& model, const std::vector<LabeledSample>& set,
                 std::vector<double>* preds, std::vector<double>* truths,
                 std::vector<double>* vars) {
  preds->reserve(set.size());
  truths->reserve(set.size());
  if (vars) vars->reserve(set.size());
  for (const auto& s : set) {
    const Eigen::VectorXd x = flatten(s.input);
    preds->push_back(predict_mean(model, x));
    truths->push_back(s.v_target);
    if (vars) vars->push_back(predict_var(model, x));
  }
}

VdkStructure variant_kernel(const Network& net, int target, KernelVariant variant, int depth) {
  switch (variant) {
    case KernelVariant::full:
      return full_kernel(net);
    case KernelVariant::vdk:
      return build_vdk(net);
    case KernelVariant::vdk_reduced: {
      VdkStructure v = build_vdk(net);
      v = reduce_vdk(v);
      return v;
    }
    case KernelVariant::vdk_depth: {
      VdkStructure v = build_vdk(net);
      v = reduce_vdk(v);
      return truncate_vdk(v, build_layers(net, target), depth);
    }
  }
  throw InvalidArgument("unknown kernel variant");
}

void check_disjoint(const std::vector<InjectionSample>& train,
                    const std::vector<InjectionSample>& test) {
  for (const auto& a : train) {
    for (const auto& b : test) {
      if (a.p == b.p && a.q == b.q)
        throw InvalidArgument("train/test sets overlap; derived seeds collided");
    }
  }
}

TrialResult one_trial(const Network& net, const ExperimentConfig& cfg, int trial) {
  const auto t0 = clock_type::now();
  const int target = net.index_of(cfg.target_bus);
  const std::uint64_t seed_train = derive_seed(cfg.master_seed, 2 * trial);
  const std::uint64_t seed_test = derive_seed(cfg.master_seed, 2 * trial + 1);

  LabelOptions lo;
  lo.solve = cfg.solve;

  const auto test_raw =
      sample_hypercube(net, cfg.fraction, cfg.n_test, cfg.test_dist, seed_test);
  const auto test = label_samples(net, test_raw, target, lo);

  GpModel model;
  if (cfg.method == Method::vdk_al) {
    AlOptions ao = cfg.al;
    ao.fraction = cfg.fraction;
    ao.dist = cfg.train_dist;
    ao.seed = seed_train;
    ao.fit = cfg.fit;
    ao.solve = cfg.solve;
    model = run_al(net, target, cfg.n_train, ao).first;
  } else {
    const auto train_raw =
        sample_hypercube(net, cfg.fraction, cfg.n_train, cfg.train_dist, seed_train);
    check_disjoint(train_raw, test_raw);
    const auto train = label_samples(net, train_raw, target, lo);
    Eigen::MatrixXd x(2 * net.size(), static_cast<int>(train.size()));
    Eigen::VectorXd y(static_cast<int>(train.size()));
    for (int i = 0; i < static_cast<int>(train.size()); ++i) {
      x.col(i) = flatten(train[i].input);
      y[i] = train[i].v_target;
    }
    const KernelVariant variant =
        cfg.method == Method::full_gp ? KernelVariant::full : cfg.variant;
    FitOptions fo = cfg.fit;
    fo.box = hypercube_box(net, cfg.fraction);
    model = fit(x, y, variant_kernel(net, target, variant, cfg.depth), fo);
  }

  std::vector<double> preds, truths, vars;
  predict_set(model, test, &preds, &truths, &vars);

  TrialResult r;
  r.case_id = cfg.case_path;
  r.target_bus = cfg.target_bus;
  r.method = cfg.method;
  r.variant = cfg.method == Method::full_gp ? KernelVariant::full : cfg.variant;
  r.trial = trial;
  r.seed = seed_train;
  r.n_train = cfg.n_train;
  r.n_test = static_cast<int>(test.size());
  r.fraction = cfg.fraction;
  r.m = metrics(preds, truths, vars);
  r.wall_s = elapsed_s(t0);
  return r;
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::full_gp: return "full_gp";
    case Method::vdk_gp: return "vdk_gp";
    case Method::vdk_al: return "vdk_al";
  }
  throw InvalidArgument("unknown method");
}

std::string variant_name(KernelVariant v) {
  switch (v) {
    case KernelVariant::full: return "full";
    case KernelVariant::vdk: return "vdk";
    case KernelVariant::vdk_reduced: return "vdk_reduced";
    case KernelVariant::vdk_depth: return "vdk_depth";
  }
  throw InvalidArgument("unknown kernel variant");
}

Metrics metrics(const std::vector<double>& preds, const std::vector<double>& truths,
                const std::vector<double>& vars) {
  if (preds.size() != truths.size())
    throw LengthMismatch(static_cast<long>(preds.size()), static_cast<long>(truths.size()));
  if (!vars.empty() && vars.size() != preds.size())
    throw LengthMismatch(static_cast<long>(vars.size()), static_cast<long>(preds.size()));
  if (preds.empty()) throw EmptyInput("metrics over an empty prediction set");
  Metrics out;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double err = std::fabs(preds[i] - truths[i]);
    out.mae += err;
    out.me = std::max(out.me, err);
  }
  out.mae /= static_cast<double>(preds.size());
  for (double v : vars) out.mpv = std::max(out.mpv, v);
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
  // SplitMix64 finalizer at stream position `counter`.
  std::uint64_t z = master + (counter + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

const char* const kCsvHeader =
    "case,target,method,variant,trial,seed,n_train,n_test,fraction,mae,me,mpv,wall_s";

std::string csv_row(const TrialResult& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%s,%d,%s,%s,%d,%llu,%d,%d,%.17g,%.17g,%.17g,%.17g,%.6f",
                r.case_id.c_str(), r.target_bus, method_name(r.method).c_str(),
                variant_name(r.variant).c_str(), r.trial,
                static_cast<unsigned long long>(r.seed), r.n_train, r.n_test, r.fraction,
                r.m.mae, r.m.me, r.m.mpv, r.wall_s);
  return buf;
}

void write_csv(const std::string& path, const std::vector<TrialResult>& rows) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open output file " + path);
  out << kCsvHeader << '\n';
  for (const auto& r : rows) out << csv_row(r) << '\n';
}

std::vector<TrialResult> run_trials(const ExperimentConfig& cfg) {
  if (cfg.n_trials < 1 || cfg.n_train < 1 || cfg.n_test < 1)
    throw InvalidArgument("trial, train and test counts must be positive");
  if (!(cfg.fraction > 0.0 && cfg.fraction < 1.0))
    throw InvalidArgument("hypercube fraction must lie in (0,1)");

  const Network net = load_case(cfg.case_path);
  std::vector<TrialResult> rows(cfg.n_trials);

  // Trials are independent; a small pool works through them and rows land in
  // trial order regardless of completion order.
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = std::min<unsigned>(hw, static_cast<unsigned>(cfg.n_trials));
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string fail_code, fail_msg;
  std::mutex fail_mutex;

  auto work = [&]() {
    for (;;) {
      const int trial = next.fetch_add(1);
      if (trial >= cfg.n_trials || failed.load()) return;
      try {
        rows[trial] = one_trial(net, cfg, trial);
      } catch (const Error& e) {
        std::lock_guard<std::mutex> lk(fail_mutex);
        if (!failed.exchange(true)) {
          fail_code = e.code();
          fail_msg = "trial " + std::to_string(trial) + ": " + e.what();
        }
        return;
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) throw Error(fail_code, fail_msg);

  if (!cfg.out_path.empty()) write_csv(cfg.out_path, rows);
  return rows;
}

CoverageResult coverage_from(const std::vector<double>& abs_err,
                             const std::vector<double>& sigma) {
  if (abs_err.empty()) throw EmptyInput("coverage study over an empty test set");
  if (abs_err.size() != sigma.size())
    throw LengthMismatch(static_cast<long>(abs_err.size()), static_cast<long>(sigma.size()));
  CoverageResult out;
  for (std::size_t i = 0; i < abs_err.size(); ++i) {
    if (abs_err[i] > 1.0 * sigma[i]) out.outside_1 += 1.0;
    if (abs_err[i] > 2.0 * sigma[i]) out.outside_2 += 1.0;
    if (abs_err[i] > 3.0 * sigma[i]) out.outside_3 += 1.0;
  }
  const double n = static_cast<double>(abs_err.size());
  out.outside_1 /= n;
  out.outside_2 /= n;
  out.outside_3 /= n;
  return out;
}

CoverageResult coverage_study(const GpModel& model, const std::vector<LabeledSample>& test) {
  if (test.empty()) throw EmptyInput("coverage study over an empty test set");
  std::vector<double> err, sig;
  err.reserve(test.size());
  sig.reserve(test.size());
  for (const auto& s : test) {
    const Eigen::VectorXd x = flatten(s.input);
    err.push_back(std::fabs(predict_mean(model, x) - s.v_target));
    sig.push_back(std::sqrt(predict_var(model, x)));
  }
  return coverage_from(err, sig);
}

std::vector<ExtrapolationPoint> extrapolation_study(const GpModel& model, const Network& net,
                                                    int target, double train_fraction,
                                                    const std::vector<double>& test_fractions,
                                                    int n_test, std::uint64_t seed,
                                                    const SolveOptions& solve) {
  std::vector<ExtrapolationPoint> out;
  LabelOptions lo;
  lo.solve = solve;
  for (std::size_t i = 0; i < test_fractions.size(); ++i) {
    const double g = test_fractions[i];
    if (g < train_fraction)
      throw InvalidArgument("extrapolation fraction below the training fraction");
    const auto samples =
        sample_hypercube(net, g, n_test, SampleDist::uniform, derive_seed(seed, i));
    const auto labeled = label_samples(net, samples, target, lo);
    std::vector<double> preds, truths, vars;
    predict_set(model, labeled, &preds, &truths, &vars);
    ExtrapolationPoint p;
    p.fraction = g;
    p.m = metrics(preds, truths, vars);
    p.n_test = static_cast<int>(labeled.size());
    out.push_back(p);
  }
  return out;
}

std::vector<DepthPoint> depth_study(const Network& net, int target,
                                    const std::vector<int>& depths,
                                    const ExperimentConfig& cfg) {
  const LayerDecomposition layers = build_layers(net, target);
  VdkStructure base = build_vdk(net);
  base = reduce_vdk(base);

  LabelOptions lo;
  lo.solve = cfg.solve;
  const auto train_raw = sample_hypercube(net, cfg.fraction, cfg.n_train, cfg.train_dist,
                                          derive_seed(cfg.master_seed, 0));
  const auto train = label_samples(net, train_raw, target, lo);
  const auto test_raw = sample_hypercube(net, cfg.fraction, cfg.n_test, cfg.test_dist,
                                         derive_seed(cfg.master_seed, 1));
  const auto test = label_samples(net, test_raw, target, lo);

  Eigen::MatrixXd x(2 * net.size(), static_cast<int>(train.size()));
  Eigen::VectorXd y(static_cast<int>(train.size()));
  for (int i = 0; i < static_cast<int>(train.size()); ++i) {
    x.col(i) = flatten(train[i].input);
    y[i] = train[i].v_target;
  }
  FitOptions fo = cfg.fit;
  fo.box = hypercube_box(net, cfg.fraction);

  std::vector<DepthPoint> out;
  for (int d : depths) {
    const VdkStructure k = truncate_vdk(base, layers, d);
    const GpModel model = fit(x, y, k, fo);
    std::vector<double> preds, truths, vars;
    predict_set(model, test, &preds, &truths, &vars);
    DepthPoint p;
    p.depth = d;
    p.n_active = static_cast<int>(k.active.size());
    p.m = metrics(preds, truths, vars);
    out.push_back(p);
  }
  return out;
}

DensityEstimate kde(const std::vector<double>& values, const Eigen::VectorXd& grid) {
  if (values.empty()) throw EmptyInput("density estimate over an empty sample");
  if (grid.size() < 2) throw InvalidArgument("density grid needs at least 2 points");
  DensityEstimate est;
  est.grid = grid;
  est.bandwidth = silverman_bandwidth(values);
  est.density = Eigen::VectorXd::Zero(grid.size());
  const double norm =
      1.0 / (values.size() * est.bandwidth * std::sqrt(2.0 * std::numbers::pi));
  for (int i = 0; i < grid.size(); ++i) {
    double acc = 0.0;
    for (double v : values) {
      const double z = (grid[i] - v) / est.bandwidth;
      acc += std::exp(-0.5 * z * z);
    }
    est.density[i] = norm * acc;
  }
  const double mass = trapezoid(est.grid, est.density);
  if (!(mass > 0.0)) throw DegenerateDensity();
  est.density /= mass;
  return est;
}

double kl_divergence(const DensityEstimate& p, const DensityEstimate& q) {
  if (p.grid.size() != q.grid.size())
    throw LengthMismatch(p.grid.size(), q.grid.size());
  if ((p.grid - q.grid).cwiseAbs().maxCoeff() > 1e-12)
    throw InvalidArgument("KL divergence requires a shared evaluation grid");
  Eigen::VectorXd integrand(p.grid.size());
  for (int i = 0; i < p.grid.size(); ++i) {
    const double pi = std::max(p.density[i], 1e-300);
    const double qi = std::max(q.density[i], 1e-300);
    integrand[i] = p.density[i] > 0.0 ? p.density[i] * std::log(pi / qi) : 0.0;
  }
  return trapezoid(p.grid, integrand);
}

std::vector<UqResult> uq_study(const GpModel& model, const Network& net, int target,
                               double fraction, const std::vector<SampleDist>& dists,
                               int n_test, std::uint64_t seed, const SolveOptions& solve) {
  LabelOptions lo;
  lo.solve = solve;
  std::vector<UqResult> out;
  for (std::size_t k = 0; k < dists.size(); ++k) {
    const auto samples =
        sample_hypercube(net, fraction, n_test, dists[k], derive_seed(seed, k));
    const auto labeled = label_samples(net, samples, target, lo);
    std::vector<double> preds, truths;
    predict_set(model, labeled, &preds, &truths, nullptr);

    // Shared evaluation grid wide enough for both smoothed densities.
    const double bw = std::max(silverman_bandwidth(truths), silverman_bandwidth(preds));
    double lo_v = std::min(*std::min_element(truths.begin(), truths.end()),
                           *std::min_element(preds.begin(), preds.end()));
    double hi_v = std::max(*std::max_element(truths.begin(), truths.end()),
                           *std::max_element(preds.begin(), preds.end()));
    lo_v -= 4.0 * bw;
    hi_v += 4.0 * bw;
    Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(2001, lo_v, hi_v);

    UqResult r;
    r.distribution = dists[k];
    r.truth = kde(truths, grid);
    r.predicted = kde(preds, grid);
    r.kl = kl_divergence(r.truth, r.predicted);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace vdkflow
