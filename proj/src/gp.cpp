#include "vdkflow/gp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "vdkflow/errors.hpp"

namespace vdkflow {

namespace {

constexpr double kJitterCap = 1e-4;
constexpr double kAdaEps = 1e-8;

// Squared distances between design columns restricted to one coordinate set.
Eigen::MatrixXd coord_sqdist(const Eigen::MatrixXd& cols, const std::vector<int>& coords) {
  const int n = static_cast<int>(cols.cols());
  Eigen::MatrixXd sliced(static_cast<int>(coords.size()), n);
  for (int j = 0; j < static_cast<int>(coords.size()); ++j) sliced.row(j) = cols.row(coords[j]);
  Eigen::VectorXd sq = sliced.colwise().squaredNorm();
  Eigen::MatrixXd d = sq.replicate(1, n) + sq.transpose().replicate(n, 1) -
                      2.0 * (sliced.transpose() * sliced);
  return d.cwiseMax(0.0);
}

std::vector<Eigen::MatrixXd> build_sqdists(const VdkStructure& vdk, const Eigen::MatrixXd& cols) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(vdk.active.size());
  for (int idx : vdk.active) out.push_back(coord_sqdist(cols, vdk.nnks[idx].coords));
  return out;
}

// Gram contribution of active NNK a over cached squared distances.
Eigen::MatrixXd nnk_gram(const NnkHypers& h, const Eigen::MatrixXd& sqdist) {
  const double a2 = h.amplitude * h.amplitude;
  const double inv = 1.0 / (2.0 * h.lengthscale * h.lengthscale);
  return (a2 * (-inv * sqdist.array()).exp()).matrix();
}

Eigen::MatrixXd assemble_gram(const GpModel& m) {
  const int n = m.size();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t a = 0; a < m.kernel.active.size(); ++a)
    k += nnk_gram(m.kernel.hypers[a], m.sqdists[a]);
  return k;
}

// Cholesky with jitter escalation; returns the noise level actually used.
double factor_with_escalation(const Eigen::MatrixXd& gram, double noise, Eigen::MatrixXd* chol) {
  const int n = static_cast<int>(gram.rows());
  double sigma2 = noise;
  while (true) {
    Eigen::LLT<Eigen::MatrixXd> llt(gram + sigma2 * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) {
      *chol = llt.matrixL();
      return sigma2;
    }
    if (sigma2 >= kJitterCap)
      throw CholeskyFailure("gram factorization failed at jitter cap " +
                            std::to_string(kJitterCap));
    sigma2 *= 10.0;
  }
}

void solve_alpha(GpModel& m) {
  m.alpha = m.chol.triangularView<Eigen::Lower>().solve(m.targets);
  m.chol.triangularView<Eigen::Lower>().transpose().solveInPlace(m.alpha);
}

// Ascend the log marginal likelihood with per-coordinate adaptive gradient
// steps in log-hyperparameter space.
void ascend(GpModel& m, int iters) {
  auto& hypers = m.kernel.hypers;
  const int na = static_cast<int>(hypers.size());
  const int dim = 2 * na + (m.opts.learn_noise ? 1 : 0);
  Eigen::VectorXd theta(dim);
  for (int a = 0; a < na; ++a) {
    theta[2 * a] = std::log(hypers[a].amplitude);
    theta[2 * a + 1] = std::log(hypers[a].lengthscale);
  }
  if (m.opts.learn_noise) theta[dim - 1] = std::log(m.noise);

  Eigen::VectorXd accum = Eigen::VectorXd::Zero(dim);
  for (int it = 0; it < iters; ++it) {
    detail::refresh(m);
    Eigen::VectorXd g = lml_gradient(m);
    if (!g.allFinite()) throw NonFiniteGradient(it);
    accum.array() += g.array().square();
    theta.array() += m.opts.lr * g.array() / (accum.array().sqrt() + kAdaEps);
    for (int a = 0; a < na; ++a) {
      hypers[a].amplitude = std::exp(theta[2 * a]);
      hypers[a].lengthscale = std::exp(theta[2 * a + 1]);
    }
    if (m.opts.learn_noise) m.noise = std::exp(theta[dim - 1]);
  }
  detail::refresh(m);
}

// Cross-covariances between a standardized query and the design columns.
Eigen::VectorXd cross_vector(const GpModel& m, const Eigen::VectorXd& s_std) {
  const int n = m.size();
  Eigen::VectorXd k = Eigen::VectorXd::Zero(n);
  for (std::size_t a = 0; a < m.kernel.active.size(); ++a) {
    const auto& coords = m.kernel.nnks[m.kernel.active[a]].coords;
    const auto& h = m.kernel.hypers[a];
    Eigen::VectorXd q(static_cast<int>(coords.size()));
    for (int j = 0; j < static_cast<int>(coords.size()); ++j) q[j] = s_std[coords[j]];
    const double a2 = h.amplitude * h.amplitude;
    const double inv = 1.0 / (2.0 * h.lengthscale * h.lengthscale);
    for (int i = 0; i < n; ++i) {
      double d = 0.0;
      for (int j = 0; j < static_cast<int>(coords.size()); ++j) {
        const double diff = q[j] - m.design(coords[j], i);
        d += diff * diff;
      }
      k[i] += a2 * std::exp(-inv * d);
    }
  }
  return k;
}

double prior_var(const GpModel& m) {
  double v = 0.0;
  for (const auto& h : m.kernel.hypers) v += h.amplitude * h.amplitude;
  return v;
}

}  // namespace

InputStandardizer InputStandardizer::from_box(const InjectionBox& box) {
  InputStandardizer st;
  st.center = 0.5 * (box.lo + box.hi);
  st.halfwidth = 0.5 * (box.hi - box.lo);
  for (int i = 0; i < st.halfwidth.size(); ++i)
    if (st.halfwidth[i] <= 0.0) st.halfwidth[i] = 1.0;
  return st;
}

InputStandardizer InputStandardizer::from_columns(const Eigen::MatrixXd& raw_cols) {
  if (raw_cols.cols() == 0) throw EmptyInput("no input columns to standardize over");
  InjectionBox box;
  box.lo = raw_cols.rowwise().minCoeff();
  box.hi = raw_cols.rowwise().maxCoeff();
  return from_box(box);
}

Eigen::VectorXd InputStandardizer::apply(const Eigen::VectorXd& raw) const {
  if (raw.size() != center.size())
    throw DimensionMismatch("input has " + std::to_string(raw.size()) +
                            " coordinates, standardizer expects " +
                            std::to_string(center.size()));
  return (raw - center).cwiseQuotient(halfwidth);
}

Eigen::MatrixXd InputStandardizer::apply_columns(const Eigen::MatrixXd& raw_cols) const {
  Eigen::MatrixXd out(raw_cols.rows(), raw_cols.cols());
  for (int c = 0; c < raw_cols.cols(); ++c) out.col(c) = apply(raw_cols.col(c));
  return out;
}

OutputStandardizer OutputStandardizer::from_targets(const Eigen::VectorXd& raw) {
  OutputStandardizer st;
  st.mean = raw.mean();
  const int n = static_cast<int>(raw.size());
  if (n > 1) {
    const double var = (raw.array() - st.mean).square().sum() / (n - 1);
    st.scale = std::sqrt(var);
  }
  if (!(st.scale > 1e-300)) st.scale = 1.0;
  return st;
}

GpModel fit(const Eigen::MatrixXd& raw_inputs_cols, const Eigen::VectorXd& raw_targets,
            const VdkStructure& kernel, const FitOptions& opts) {
  if (raw_targets.size() < 2)
    throw InvalidArgument("need at least 2 training pairs, got " +
                          std::to_string(raw_targets.size()));
  GpModel m = detail::assemble(raw_inputs_cols, raw_targets, kernel, opts);
  ascend(m, opts.iters);
  return m;
}

double log_marginal_likelihood(const GpModel& m) {
  const double quad = m.targets.dot(m.alpha);
  const double logdet = m.chol.diagonal().array().log().sum();
  return -0.5 * quad - logdet - 0.5 * m.size() * std::log(2.0 * std::numbers::pi);
}

Eigen::VectorXd lml_gradient(const GpModel& m) {
  const int n = m.size();
  const int na = static_cast<int>(m.kernel.active.size());
  // W = alpha alpha^T - (K + noise I)^{-1}
  Eigen::MatrixXd kinv = Eigen::MatrixXd::Identity(n, n);
  m.chol.triangularView<Eigen::Lower>().solveInPlace(kinv);
  m.chol.triangularView<Eigen::Lower>().transpose().solveInPlace(kinv);
  Eigen::MatrixXd w = m.alpha * m.alpha.transpose() - kinv;

  Eigen::VectorXd g(2 * na + (m.opts.learn_noise ? 1 : 0));
  for (int a = 0; a < na; ++a) {
    const auto& h = m.kernel.hypers[a];
    const Eigen::MatrixXd gram = nnk_gram(h, m.sqdists[a]);
    // dK/dlog a = 2 G;  dK/dlog l = G .* D / l^2
    g[2 * a] = w.cwiseProduct(gram).sum();
    g[2 * a + 1] = 0.5 * w.cwiseProduct(gram.cwiseProduct(m.sqdists[a])).sum() /
                   (h.lengthscale * h.lengthscale);
  }
  if (m.opts.learn_noise) g[2 * na] = 0.5 * m.noise * w.trace();
  return g;
}

double predict_mean(const GpModel& m, const Eigen::VectorXd& raw_s) {
  const Eigen::VectorXd k = cross_vector(m, m.in_std.apply(raw_s));
  return m.out_std.invert(k.dot(m.alpha));
}

double predict_var(const GpModel& m, const Eigen::VectorXd& raw_s) {
  const Eigen::VectorXd k = cross_vector(m, m.in_std.apply(raw_s));
  const Eigen::VectorXd v = m.chol.triangularView<Eigen::Lower>().solve(k);
  double var = prior_var(m) - v.squaredNorm();
  if (var < 0.0) {
    ++m.var_clamp_events;
    std::fprintf(stderr, "[gp] clamped negative predictive variance %.3e (event %lld)\n", var,
                 static_cast<long long>(m.var_clamp_events));
    var = 0.0;
  }
  return var * m.out_std.scale * m.out_std.scale;
}

void update(GpModel& m, const Eigen::VectorXd& raw_s, double raw_target) {
  const int n = m.size();
  const Eigen::VectorXd s_std = m.in_std.apply(raw_s);
  const Eigen::VectorXd k_new = cross_vector(m, s_std);

  // Extend cached state first so a fallback refresh sees the full set.
  for (std::size_t a = 0; a < m.kernel.active.size(); ++a) {
    const auto& coords = m.kernel.nnks[m.kernel.active[a]].coords;
    Eigen::VectorXd row(n);
    for (int i = 0; i < n; ++i) {
      double d = 0.0;
      for (int cj : coords) {
        const double diff = s_std[cj] - m.design(cj, i);
        d += diff * diff;
      }
      row[i] = d;
    }
    Eigen::MatrixXd& sd = m.sqdists[a];
    sd.conservativeResize(n + 1, n + 1);
    sd.block(0, n, n, 1) = row;
    sd.block(n, 0, 1, n) = row.transpose();
    sd(n, n) = 0.0;
  }
  m.design.conservativeResize(Eigen::NoChange, n + 1);
  m.design.col(n) = s_std;
  m.targets.conservativeResize(n + 1);
  m.targets[n] = m.out_std.apply(raw_target);

  // Bordered Cholesky: one forward solve instead of a full refactorization.
  const Eigen::VectorXd l = m.chol.triangularView<Eigen::Lower>().solve(k_new);
  const double kss = prior_var(m) + m.noise;
  const double d2 = kss - l.squaredNorm();
  if (d2 > 1e-14 * kss) {
    m.chol.conservativeResize(n + 1, n + 1);
    m.chol.block(0, n, n, 1).setZero();
    m.chol.block(n, 0, 1, n) = l.transpose();
    m.chol(n, n) = std::sqrt(d2);
    solve_alpha(m);
  } else {
    detail::refresh(m);  // numerically degenerate border: refactor with escalation
  }
}

void retune(GpModel& m, int iters) {
  // Refresh output statistics over the current training set, then re-ascend.
  const Eigen::VectorXd raw = (m.targets.array() * m.out_std.scale + m.out_std.mean).matrix();
  m.out_std = OutputStandardizer::from_targets(raw);
  m.targets = (raw.array() - m.out_std.mean) / m.out_std.scale;
  ascend(m, iters);
}

double information_gain(const VdkStructure& kernel, const Eigen::MatrixXd& design_cols,
                        double noise) {
  if (noise <= 0.0) throw InvalidArgument("information gain requires positive noise");
  const int n = static_cast<int>(design_cols.cols());
  if (n == 0) return 0.0;
  const Eigen::MatrixXd k = gram(kernel, design_cols);
  Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd::Identity(n, n) + k / noise);
  if (llt.info() != Eigen::Success)
    throw CholeskyFailure("information-gain factorization failed");
  return Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

namespace {

constexpr int kModelFormatVersion = 1;

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd json_vec(const nlohmann::json& j) {
  const auto vals = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<int>(vals.size()));
}

}  // namespace

void save_model(const std::string& path, const GpModel& m) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["noise"] = m.noise;

  nlohmann::json k;
  k["nnks"] = nlohmann::json::array();
  for (const auto& nnk : m.kernel.nnks)
    k["nnks"].push_back({{"owner_bus", nnk.owner_bus},
                         {"coords", nnk.coords},
                         {"redundant", nnk.redundant}});
  k["active"] = m.kernel.active;
  k["hypers"] = nlohmann::json::array();
  for (const auto& h : m.kernel.hypers)
    k["hypers"].push_back({{"amplitude", h.amplitude}, {"lengthscale", h.lengthscale}});
  j["kernel"] = std::move(k);

  j["design"] = nlohmann::json::array();
  for (int c = 0; c < m.design.cols(); ++c) j["design"].push_back(vec_json(m.design.col(c)));
  j["targets"] = vec_json(m.targets);
  j["in_std"] = {{"center", vec_json(m.in_std.center)},
                 {"halfwidth", vec_json(m.in_std.halfwidth)}};
  j["out_std"] = {{"mean", m.out_std.mean}, {"scale", m.out_std.scale}};
  j["opts"] = {{"lr", m.opts.lr},
               {"iters", m.opts.iters},
               {"noise", m.opts.noise},
               {"learn_noise", m.opts.learn_noise}};
  if (m.opts.box)
    j["opts"]["box"] = {{"lo", vec_json(m.opts.box->lo)}, {"hi", vec_json(m.opts.box->hi)}};

  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open model file for writing: " + path);
  out << j.dump(2) << '\n';
}

GpModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("model file is not valid JSON: " + std::string(e.what()));
  }
  if (j.value("format_version", -1) != kModelFormatVersion)
    throw InvalidArgument("unsupported model format version in " + path);

  GpModel m;
  m.noise = j.at("noise").get<double>();
  const auto& k = j.at("kernel");
  for (const auto& nj : k.at("nnks")) {
    NnkDescriptor d;
    d.owner_bus = nj.at("owner_bus").get<int>();
    d.coords = nj.at("coords").get<std::vector<int>>();
    d.redundant = nj.at("redundant").get<bool>();
    m.kernel.nnks.push_back(std::move(d));
  }
  m.kernel.active = k.at("active").get<std::vector<int>>();
  for (const auto& hj : k.at("hypers"))
    m.kernel.hypers.push_back(
        {hj.at("amplitude").get<double>(), hj.at("lengthscale").get<double>()});
  if (m.kernel.hypers.size() != m.kernel.active.size())
    throw InvalidArgument("model kernel hypers/active size mismatch");

  const auto& cols = j.at("design");
  if (cols.empty()) throw EmptyInput("model has no design columns");
  m.design.resize(json_vec(cols[0]).size(), static_cast<int>(cols.size()));
  for (int c = 0; c < m.design.cols(); ++c) m.design.col(c) = json_vec(cols[c]);
  m.targets = json_vec(j.at("targets"));
  if (m.targets.size() != m.design.cols())
    throw DimensionMismatch("model targets/design count mismatch");

  m.in_std.center = json_vec(j.at("in_std").at("center"));
  m.in_std.halfwidth = json_vec(j.at("in_std").at("halfwidth"));
  m.out_std.mean = j.at("out_std").at("mean").get<double>();
  m.out_std.scale = j.at("out_std").at("scale").get<double>();
  const auto& o = j.at("opts");
  m.opts.lr = o.at("lr").get<double>();
  m.opts.iters = o.at("iters").get<int>();
  m.opts.noise = o.at("noise").get<double>();
  m.opts.learn_noise = o.at("learn_noise").get<bool>();
  if (o.contains("box")) {
    InjectionBox box;
    box.lo = json_vec(o.at("box").at("lo"));
    box.hi = json_vec(o.at("box").at("hi"));
    m.opts.box = std::move(box);
  }

  m.sqdists = build_sqdists(m.kernel, m.design);
  detail::refresh(m);
  return m;
}

namespace detail {

GpModel assemble(const Eigen::MatrixXd& raw_inputs_cols, const Eigen::VectorXd& raw_targets,
                 const VdkStructure& kernel, const FitOptions& opts) {
  if (raw_inputs_cols.cols() != raw_targets.size())
    throw DimensionMismatch("inputs/targets count mismatch: " +
                            std::to_string(raw_inputs_cols.cols()) + " vs " +
                            std::to_string(raw_targets.size()));
  if (raw_targets.size() == 0) throw EmptyInput("no training pairs");
  if (kernel.active.empty()) throw InvalidArgument("kernel has no active components");

  GpModel m;
  m.kernel = kernel;
  m.opts = opts;
  m.noise = opts.noise;
  m.in_std = opts.box ? InputStandardizer::from_box(*opts.box)
                      : InputStandardizer::from_columns(raw_inputs_cols);
  m.out_std = OutputStandardizer::from_targets(raw_targets);
  m.design = m.in_std.apply_columns(raw_inputs_cols);
  m.targets = (raw_targets.array() - m.out_std.mean) / m.out_std.scale;
  m.sqdists = build_sqdists(m.kernel, m.design);
  refresh(m);
  return m;
}

void refresh(GpModel& m) {
  // Escalation is per-factorization: restart from the configured floor unless
  // the noise itself is a learned parameter.
  const double base = m.opts.learn_noise ? m.noise : m.opts.noise;
  m.noise = factor_with_escalation(assemble_gram(m), base, &m.chol);
  solve_alpha(m);
}

}  // namespace detail

}  // namespace vdkflow
