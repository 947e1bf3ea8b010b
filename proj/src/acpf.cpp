#include "vdkflow/acpf.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <random>

#include <Eigen/SparseLU>

#include "vdkflow/errors.hpp"

namespace vdkflow {

namespace {

using cplx = std::complex<double>;

// Uniform double in [0, 1) from the top 53 bits of the generator output.
// std::uniform_real_distribution is implementation-defined, so samples drawn
// through it would not be reproducible across standard libraries.
double next_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller on explicit uniforms (reproducible).
double next_normal(std::mt19937_64& rng) {
  double u1 = next_uniform(rng);
  while (u1 <= 0.0) u1 = next_uniform(rng);
  const double u2 = next_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Truncated N(0.5, 1/6^2) restricted to [0, 1] by rejection: the box center
// maps to 0.5 and the box half-width to three standard deviations.
double next_truncated_normal(std::mt19937_64& rng) {
  for (;;) {
    const double z = 0.5 + next_normal(rng) / 6.0;
    if (z >= 0.0 && z <= 1.0) return z;
  }
}

// Beta(2,5) on [0, 1]: the 2nd order statistic of six uniforms.
double next_beta_2_5(std::mt19937_64& rng) {
  double smallest = 2.0, second = 2.0;
  for (int k = 0; k < 6; ++k) {
    const double u = next_uniform(rng);
    if (u < smallest) {
      second = smallest;
      smallest = u;
    } else if (u < second) {
      second = u;
    }
  }
  return second;
}

double next_unit_draw(std::mt19937_64& rng, SampleDist dist) {
  switch (dist) {
    case SampleDist::uniform:
      return next_uniform(rng);
    case SampleDist::normal:
      return next_truncated_normal(rng);
    case SampleDist::beta:
      return next_beta_2_5(rng);
  }
  throw InvalidArgument("unknown sample distribution");
}

std::vector<int> non_slack_indices(const Network& net) {
  std::vector<int> ns;
  ns.reserve(net.size() - 1);
  for (int i = 0; i < net.size(); ++i)
    if (i != net.slack) ns.push_back(i);
  return ns;
}

std::vector<int> pq_indices(const Network& net) {
  std::vector<int> pq;
  for (int i = 0; i < net.size(); ++i)
    if (net.buses[i].kind == BusKind::pq) pq.push_back(i);
  return pq;
}

// Net complex power injected at every bus for the voltage phasor vector.
Eigen::VectorXcd calc_injections(const Network& net, const Eigen::VectorXcd& v) {
  const Eigen::VectorXcd i_bus = net.ybus * v;
  return v.cwiseProduct(i_bus.conjugate());
}

// Pinned magnitude for PV/slack buses: the generator setpoint.
double pinned_mag(const Bus& b) { return b.has_gen ? b.gen_v_set : b.base_v_mag; }

Eigen::VectorXcd start_voltage(const Network& net, bool flat_start) {
  const int nb = net.size();
  Eigen::VectorXcd v(nb);
  const double slack_ang = net.buses[net.slack].base_v_ang;
  for (int i = 0; i < nb; ++i) {
    const Bus& b = net.buses[i];
    const bool pinned = (i == net.slack) || b.kind == BusKind::pv;
    const double mag = pinned ? pinned_mag(b) : (flat_start ? 1.0 : b.base_v_mag);
    // Angles are referenced to the slack (solution invariant: slack angle 0).
    const double ang = flat_start ? 0.0 : b.base_v_ang - slack_ang;
    v(i) = std::polar(mag, ang);
  }
  return v;
}

// Jacobian of the reduced mismatch [dP at `ns`; dQ at `pq`] with respect to
// the reduced state [theta at `ns`; |v| at `pq`], assembled over the sparsity
// pattern of Y:
//   dS/dtheta(i,k) = j v_i conj(delta_ik i_i - Y_ik v_k)
//   dS/d|v|(i,k)   = v_i conj(Y_ik) conj(vn_k) + delta_ik conj(i_i) vn_i
// with vn = v ./ |v|. Entries are derivatives of the calculated injection S,
// so the Newton step below is x += J^-1 (spec - S_calc).
Eigen::SparseMatrix<double> assemble_jacobian(const Network& net, const Eigen::VectorXcd& v,
                                              const std::vector<int>& ns,
                                              const std::vector<int>& pq) {
  const int nb = net.size();
  const int n_p = static_cast<int>(ns.size());
  const int n_q = static_cast<int>(pq.size());

  // Row/column positions of each bus in the reduced system (-1 = absent).
  std::vector<int> p_row(nb, -1), q_row(nb, -1);
  for (int r = 0; r < n_p; ++r) p_row[ns[r]] = r;
  for (int r = 0; r < n_q; ++r) q_row[pq[r]] = n_p + r;

  const Eigen::VectorXcd i_bus = net.ybus * v;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * net.ybus.nonZeros());
  const cplx imag_unit(0.0, 1.0);
  for (int col = 0; col < net.ybus.outerSize(); ++col) {
    for (Eigen::SparseMatrix<cplx>::InnerIterator y(net.ybus, col); y; ++y) {
      const int i = static_cast<int>(y.row());
      const int k = col;
      const cplx vnk = v(k) / std::abs(v(k));
      cplx dth = -imag_unit * v(i) * std::conj(y.value() * v(k));
      cplx dvm = v(i) * std::conj(y.value() * vnk);
      if (i == k) {
        dth += imag_unit * v(i) * std::conj(i_bus(i));
        dvm += std::conj(i_bus(i)) * vnk;
      }
      const int rp = p_row[i], rq = q_row[i];
      const int cth = p_row[k], cvm = q_row[k];
      if (rp >= 0 && cth >= 0) trip.emplace_back(rp, cth, dth.real());
      if (rp >= 0 && cvm >= 0) trip.emplace_back(rp, cvm, dvm.real());
      if (rq >= 0 && cth >= 0) trip.emplace_back(rq, cth, dth.imag());
      if (rq >= 0 && cvm >= 0) trip.emplace_back(rq, cvm, dvm.imag());
    }
  }
  Eigen::SparseMatrix<double> jac(n_p + n_q, n_p + n_q);
  jac.setFromTriplets(trip.begin(), trip.end());
  jac.makeCompressed();
  return jac;
}

struct NewtonState {
  Eigen::VectorXcd v;
  int iterations = 0;
  double max_mismatch = 0.0;
};

// Core polar Newton iteration for a fixed bus-kind partition. `pq` lists the
// buses whose magnitude is free; P is matched at every non-slack bus.
NewtonState newton_iterate(const Network& net, const Eigen::VectorXd& p_spec,
                           const Eigen::VectorXd& q_spec, const std::vector<int>& ns,
                           const std::vector<int>& pq, Eigen::VectorXcd v,
                           const SolveOptions& opts) {
  const int n_p = static_cast<int>(ns.size());
  const int n_q = static_cast<int>(pq.size());
  Eigen::VectorXd mis(n_p + n_q);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;

  double mx = 0.0;
  for (int it = 0; it <= opts.max_iter; ++it) {
    const Eigen::VectorXcd s_calc = calc_injections(net, v);
    for (int r = 0; r < n_p; ++r) mis(r) = p_spec(ns[r]) - s_calc(ns[r]).real();
    for (int r = 0; r < n_q; ++r) mis(n_p + r) = q_spec(pq[r]) - s_calc(pq[r]).imag();
    mx = mis.size() ? mis.cwiseAbs().maxCoeff() : 0.0;
    if (mx <= opts.tol) return {std::move(v), it, mx};
    if (it == opts.max_iter) break;

    lu.compute(assemble_jacobian(net, v, ns, pq));
    if (lu.info() != Eigen::Success) throw SingularJacobian(it);
    const Eigen::VectorXd dx = lu.solve(mis);
    if (!dx.allFinite()) throw SingularJacobian(it);

    for (int r = 0; r < n_p; ++r) {
      const int i = ns[r];
      v(i) = std::polar(std::abs(v(i)), std::arg(v(i)) + dx(r));
    }
    for (int r = 0; r < n_q; ++r) {
      const int i = pq[r];
      v(i) = std::polar(std::abs(v(i)) + dx(n_p + r), std::arg(v(i)));
    }
  }
  throw NonConvergence(opts.max_iter, mx);
}

}  // namespace

SampleDist parse_dist(const std::string& name) {
  if (name == "uniform") return SampleDist::uniform;
  if (name == "normal") return SampleDist::normal;
  if (name == "beta") return SampleDist::beta;
  throw InvalidArgument("unknown distribution '" + name + "' (expected uniform|normal|beta)");
}

std::string dist_name(SampleDist dist) {
  switch (dist) {
    case SampleDist::uniform:
      return "uniform";
    case SampleDist::normal:
      return "normal";
    case SampleDist::beta:
      return "beta";
  }
  return "unknown";
}

InjectionSample base_injection(const Network& net) {
  const int nb = net.size();
  InjectionSample s;
  s.p.resize(nb);
  s.q.resize(nb);
  for (int i = 0; i < nb; ++i) {
    const Bus& b = net.buses[i];
    s.p(i) = (b.gen_p_mw - b.p_load_mw) / net.base_mva;
    s.q(i) = (b.gen_q_mvar - b.q_load_mvar) / net.base_mva;
  }
  return s;
}

InjectionBox hypercube_box(const Network& net, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw InvalidArgument("hypercube fraction must lie in (0, 1)");
  const Eigen::VectorXd base = flatten(base_injection(net));
  InjectionBox box{base, base};
  const int nb = net.size();
  for (int i : net.load_bus_indices) {
    if (i == net.slack) continue;  // slack injections are solver outputs
    for (int c : {i, nb + i}) {
      const double a = (1.0 - fraction) * base(c);
      const double b = (1.0 + fraction) * base(c);
      box.lo(c) = std::min(a, b);
      box.hi(c) = std::max(a, b);
    }
  }
  return box;
}

Eigen::VectorXd flatten(const InjectionSample& s) {
  Eigen::VectorXd x(s.p.size() + s.q.size());
  x << s.p, s.q;
  return x;
}

InjectionSample unflatten(const Network& net, const Eigen::VectorXd& x) {
  const int nb = net.size();
  if (x.size() != 2 * nb)
    throw DimensionMismatch("injection vector has " + std::to_string(x.size()) +
                            " entries, expected " + std::to_string(2 * nb));
  InjectionSample s;
  s.p = x.head(nb);
  s.q = x.tail(nb);
  return s;
}

std::vector<InjectionSample> sample_hypercube(const Network& net, double fraction, int n,
                                              SampleDist dist, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("sample count must be at least 1");
  if (net.load_bus_indices.empty()) throw NoLoadBuses();
  const InjectionBox box = hypercube_box(net, fraction);
  const int nb = net.size();

  // Varying coordinates in a fixed order: p then q per load bus.
  std::vector<int> coords;
  for (int i : net.load_bus_indices) {
    if (i == net.slack) continue;
    coords.push_back(i);
    coords.push_back(nb + i);
  }
  if (coords.empty()) throw NoLoadBuses();

  std::mt19937_64 rng(seed);
  std::vector<InjectionSample> out;
  out.reserve(n);
  const Eigen::VectorXd base = flatten(base_injection(net));
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd x = base;
    for (int c : coords) {
      const double u = next_unit_draw(rng, dist);
      x(c) = box.lo(c) + u * (box.hi(c) - box.lo(c));
    }
    InjectionSample s = unflatten(net, x);
    s.distribution = dist;
    s.hypercube_fraction = fraction;
    s.seed = seed;
    out.push_back(std::move(s));
  }
  return out;
}

PowerFlowSolution solve_acpf(const Network& net, const InjectionSample& s,
                             const SolveOptions& opts) {
  if (!(opts.tol > 0.0)) throw InvalidArgument("solver tolerance must be positive");
  if (s.p.size() != net.size() || s.q.size() != net.size())
    throw DimensionMismatch("injection sample length does not match bus count");

  const std::vector<int> ns = non_slack_indices(net);
  std::vector<int> pq = pq_indices(net);
  Eigen::VectorXd q_spec = s.q;
  Eigen::VectorXcd v = start_voltage(net, opts.flat_start);

  NewtonState st = newton_iterate(net, s.p, q_spec, ns, pq, std::move(v), opts);

  if (opts.enforce_q_limits) {
    // Generators with finite reactive limits are clamped to the violated
    // limit and their bus re-solved as PQ; repeat until no new violations.
    std::vector<bool> demoted(net.size(), false);
    for (int round = 0; round < net.size(); ++round) {
      const Eigen::VectorXcd s_calc = calc_injections(net, st.v);
      bool changed = false;
      for (int i = 0; i < net.size(); ++i) {
        const Bus& b = net.buses[i];
        if (i == net.slack || b.kind != BusKind::pv || demoted[i]) continue;
        const double qg = s_calc(i).imag() * net.base_mva + b.q_load_mvar;
        double clamped = qg;
        if (std::isfinite(b.gen_q_max_mvar)) clamped = std::min(clamped, b.gen_q_max_mvar);
        if (std::isfinite(b.gen_q_min_mvar)) clamped = std::max(clamped, b.gen_q_min_mvar);
        if (clamped != qg) {
          demoted[i] = true;
          q_spec(i) = (clamped - b.q_load_mvar) / net.base_mva;
          pq.push_back(i);
          changed = true;
        }
      }
      if (!changed) break;
      std::sort(pq.begin(), pq.end());
      st = newton_iterate(net, s.p, q_spec, ns, pq, std::move(st.v), opts);
    }
  }

  PowerFlowSolution sol;
  sol.v_mag = st.v.cwiseAbs();
  sol.v_ang.resize(net.size());
  const double ref = std::arg(st.v(net.slack));
  for (int i = 0; i < net.size(); ++i) sol.v_ang(i) = std::arg(st.v(i)) - ref;
  sol.iterations = st.iterations;
  sol.max_mismatch = st.max_mismatch;
  return sol;
}

double mismatch_residual(const Network& net, const InjectionSample& s,
                         const PowerFlowSolution& sol) {
  const int nb = net.size();
  if (sol.v_mag.size() != nb || sol.v_ang.size() != nb)
    throw DimensionMismatch("solution length does not match bus count");
  Eigen::VectorXcd v(nb);
  for (int i = 0; i < nb; ++i) v(i) = std::polar(sol.v_mag(i), sol.v_ang(i));
  const Eigen::VectorXcd s_calc = calc_injections(net, v);
  double mx = 0.0;
  for (int i = 0; i < nb; ++i) {
    if (i == net.slack) continue;
    mx = std::max(mx, std::abs(s.p(i) - s_calc(i).real()));
    if (net.buses[i].kind == BusKind::pq)
      mx = std::max(mx, std::abs(s.q(i) - s_calc(i).imag()));
  }
  return mx;
}

std::vector<LabeledSample> label_samples(const Network& net,
                                         const std::vector<InjectionSample>& samples,
                                         int target_bus, const LabelOptions& opts) {
  if (target_bus < 0 || target_bus >= net.size())
    throw IndexOutOfRange("target bus index " + std::to_string(target_bus));
  if (net.buses[target_bus].kind != BusKind::pq)
    throw InvalidArgument("target bus " + std::to_string(net.buses[target_bus].id) +
                          " is not a PQ bus; its voltage is not a free state");

  std::vector<LabeledSample> out;
  out.reserve(samples.size());
  int failed = 0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    try {
      const PowerFlowSolution sol = solve_acpf(net, samples[k], opts.solve);
      out.push_back({samples[k], sol.v_mag(target_bus)});
    } catch (const NonConvergence& e) {
      ++failed;
      std::fprintf(stderr, "warning: dropping sample %zu (no convergence, mismatch %.3e)\n", k,
                   e.mismatch);
    }
  }
  const int total = static_cast<int>(samples.size());
  if (total > 0 && failed > opts.max_failure_ratio * total) throw TooManyFailures(failed, total);
  return out;
}

namespace detail {

double unit_uniform(std::mt19937_64& rng) { return next_uniform(rng); }

Eigen::VectorXd reduced_mismatch(const Network& net, const Eigen::VectorXd& p_spec,
                                 const Eigen::VectorXd& q_spec, const Eigen::VectorXcd& v) {
  const std::vector<int> ns = non_slack_indices(net);
  const std::vector<int> pq = pq_indices(net);
  const Eigen::VectorXcd s_calc = calc_injections(net, v);
  Eigen::VectorXd mis(ns.size() + pq.size());
  for (std::size_t r = 0; r < ns.size(); ++r) mis(r) = p_spec(ns[r]) - s_calc(ns[r]).real();
  for (std::size_t r = 0; r < pq.size(); ++r)
    mis(ns.size() + r) = q_spec(pq[r]) - s_calc(pq[r]).imag();
  return mis;
}

Eigen::SparseMatrix<double> reduced_jacobian(const Network& net, const Eigen::VectorXcd& v) {
  return assemble_jacobian(net, v, non_slack_indices(net), pq_indices(net));
}

Eigen::VectorXcd reduced_state_voltage(const Network& net, const Eigen::VectorXcd& v,
                                       const Eigen::VectorXd& delta) {
  const std::vector<int> ns = non_slack_indices(net);
  const std::vector<int> pq = pq_indices(net);
  if (delta.size() != static_cast<Eigen::Index>(ns.size() + pq.size()))
    throw DimensionMismatch("state perturbation has wrong length");
  Eigen::VectorXcd out = v;
  for (std::size_t r = 0; r < ns.size(); ++r) {
    const int i = ns[r];
    out(i) = std::polar(std::abs(out(i)), std::arg(out(i)) + delta(r));
  }
  for (std::size_t r = 0; r < pq.size(); ++r) {
    const int i = pq[r];
    out(i) = std::polar(std::abs(out(i)) + delta(ns.size() + r), std::arg(out(i)));
  }
  return out;
}

}  // namespace detail

}  // namespace vdkflow
