#include "vdkflow/kernels.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "vdkflow/errors.hpp"

namespace vdkflow {

namespace {

double initial_lengthscale(std::size_t dim) {
  return std::max(1.0, std::sqrt(static_cast<double>(dim) / 3.0));
}

// Squared distance between the coordinate slices of two stacked vectors.
double slice_sqdist(const std::vector<int>& coords, const Eigen::VectorXd& a,
                    const Eigen::VectorXd& b) {
  double d = 0.0;
  for (int c : coords) {
    const double diff = a(c) - b(c);
    d += diff * diff;
  }
  return d;
}

}  // namespace

void reset_hypers(VdkStructure& v) {
  const double amp = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(1, v.active.size())));
  v.hypers.clear();
  v.hypers.reserve(v.active.size());
  for (int idx : v.active) v.hypers.push_back({amp, initial_lengthscale(v.nnks[idx].coords.size())});
}

double se_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double amplitude,
                 double lengthscale) {
  if (x.size() != y.size())
    throw DimensionMismatch("kernel inputs have lengths " + std::to_string(x.size()) + " and " +
                            std::to_string(y.size()));
  if (!(amplitude > 0.0) || !(lengthscale > 0.0))
    throw InvalidArgument("kernel hyperparameters must be positive");
  const double d2 = (x - y).squaredNorm();
  return amplitude * amplitude * std::exp(-d2 / (2.0 * lengthscale * lengthscale));
}

VdkStructure build_vdk(const Network& net) {
  const int nb = net.size();
  VdkStructure v;
  v.nnks.reserve(nb);
  v.active.reserve(nb);
  for (int b = 0; b < nb; ++b) {
    NnkDescriptor nnk;
    nnk.owner_bus = b;
    const std::vector<int> hood = neighborhood(net, b);
    nnk.coords.reserve(2 * hood.size());
    for (int j : hood) nnk.coords.push_back(j);
    for (int j : hood) nnk.coords.push_back(nb + j);
    std::sort(nnk.coords.begin(), nnk.coords.end());
    v.nnks.push_back(std::move(nnk));
    v.active.push_back(b);
  }
  reset_hypers(v);
  return v;
}

VdkStructure full_kernel(const Network& net) {
  VdkStructure v;
  NnkDescriptor nnk;
  nnk.owner_bus = -1;
  nnk.coords.resize(2 * net.size());
  for (int c = 0; c < 2 * net.size(); ++c) nnk.coords[c] = c;
  v.nnks.push_back(std::move(nnk));
  v.active.push_back(0);
  reset_hypers(v);
  return v;
}

VdkStructure reduce_vdk(const VdkStructure& v) {
  VdkStructure out = v;
  const std::size_t n = out.nnks.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ci = out.nnks[i].coords;
    bool redundant = false;
    for (std::size_t k = 0; k < n && !redundant; ++k) {
      if (k == i) continue;
      const auto& ck = out.nnks[k].coords;
      if (ci.size() > ck.size()) continue;
      if (!std::includes(ck.begin(), ck.end(), ci.begin(), ci.end())) continue;
      if (ci.size() < ck.size()) {
        redundant = true;  // proper subset of another NNK's coordinates
      } else if (out.nnks[k].owner_bus < out.nnks[i].owner_bus) {
        redundant = true;  // identical sets: lowest owner index survives
      }
    }
    out.nnks[i].redundant = redundant;
  }
  out.active.clear();
  for (std::size_t i = 0; i < n; ++i)
    if (!out.nnks[i].redundant) out.active.push_back(static_cast<int>(i));
  reset_hypers(out);
  return out;
}

VdkStructure truncate_vdk(const VdkStructure& v, const LayerDecomposition& layers, int depth) {
  if (depth < 1 || depth > layers.depth()) throw DepthOutOfRange(depth, layers.depth());
  // Owner buses within D_1 .. D_depth.
  std::vector<char> bus_in;
  int max_bus = -1;
  for (const auto& nnk : v.nnks) max_bus = std::max(max_bus, nnk.owner_bus);
  bus_in.assign(static_cast<std::size_t>(max_bus) + 2, 0);
  for (int d = 0; d < depth; ++d)
    for (int b : layers.layers[d])
      if (b >= 0 && b <= max_bus) bus_in[b] = 1;

  VdkStructure out;
  out.nnks = v.nnks;
  for (std::size_t a = 0; a < v.active.size(); ++a) {
    const int idx = v.active[a];
    const int owner = v.nnks[idx].owner_bus;
    if (owner >= 0 && owner <= max_bus && bus_in[owner]) {
      out.active.push_back(idx);
      out.hypers.push_back(v.hypers[a]);
    }
  }
  return out;
}

double eval_vdk(const VdkStructure& v, const Eigen::VectorXd& s1, const Eigen::VectorXd& s2) {
  if (s1.size() != s2.size())
    throw DimensionMismatch("kernel inputs have lengths " + std::to_string(s1.size()) + " and " +
                            std::to_string(s2.size()));
  double sum = 0.0;
  for (std::size_t a = 0; a < v.active.size(); ++a) {
    const auto& nnk = v.nnks[v.active[a]];
    if (!nnk.coords.empty() && nnk.coords.back() >= s1.size())
      throw DimensionMismatch("kernel coordinates exceed input length");
    const double d2 = slice_sqdist(nnk.coords, s1, s2);
    const NnkHypers& h = v.hypers[a];
    sum += h.amplitude * h.amplitude * std::exp(-d2 / (2.0 * h.lengthscale * h.lengthscale));
  }
  return sum;
}

Eigen::MatrixXd gram(const VdkStructure& v, const Eigen::MatrixXd& design) {
  if (design.cols() < 1) throw EmptyInput("gram needs at least one sample column");
  const Eigen::Index n = design.cols();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double val = eval_vdk(v, design.col(i), design.col(j));
      k(i, j) = val;
      k(j, i) = val;
    }
  }
  return k;
}

std::string dump_vdk_json(const VdkStructure& v) {
  nlohmann::json j;
  j["nnks"] = nlohmann::json::array();
  for (const auto& nnk : v.nnks) {
    j["nnks"].push_back({{"owner_bus", nnk.owner_bus},
                         {"coords", nnk.coords},
                         {"redundant", nnk.redundant}});
  }
  j["active"] = v.active;
  j["hypers"] = nlohmann::json::array();
  for (const auto& h : v.hypers)
    j["hypers"].push_back({{"amplitude", h.amplitude}, {"lengthscale", h.lengthscale}});
  return j.dump(2);
}

}  // namespace vdkflow
