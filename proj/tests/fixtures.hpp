#pragma once

#include <sstream>
#include <string>
#include <vector>

// Synthetic case-text builders for small, hand-analyzable networks. Every
// fixture emits the same MATPOWER text subset the parser consumes, so tests
// exercise the full load path instead of poking structs together by hand.
namespace fixtures {

struct BusRow {
  int id = 0;
  int type = 1;  // 1 PQ, 2 PV, 3 slack
  double pd = 0.0;
  double qd = 0.0;
  double gs = 0.0;
  double bs = 0.0;
  double vm = 1.0;
  double va_deg = 0.0;
};

struct GenRow {
  int bus = 0;
  double pg = 0.0;
  double qg = 0.0;
  double qmax = 999.0;
  double qmin = -999.0;
  double vg = 1.0;
};

struct BranchRow {
  int from = 0;
  int to = 0;
  double r = 0.01;
  double x = 0.05;
  double b = 0.0;
  double ratio = 0.0;  // 0 means "no transformer" in the file format
  double angle_deg = 0.0;
  int status = 1;
};

inline std::string make_case(const std::vector<BusRow>& buses, const std::vector<GenRow>& gens,
                             const std::vector<BranchRow>& branches, double base_mva = 100.0) {
  std::ostringstream os;
  os.precision(17);
  os << "function mpc = synthetic\n";
  os << "mpc.version = '2';\n";
  os << "mpc.baseMVA = " << base_mva << ";\n";
  os << "mpc.bus = [\n";
  for (const auto& b : buses) {
    os << "\t" << b.id << "\t" << b.type << "\t" << b.pd << "\t" << b.qd << "\t" << b.gs << "\t"
       << b.bs << "\t1\t" << b.vm << "\t" << b.va_deg << "\t0\t1\t1.1\t0.9;\n";
  }
  os << "];\n";
  os << "mpc.gen = [\n";
  for (const auto& g : gens) {
    os << "\t" << g.bus << "\t" << g.pg << "\t" << g.qg << "\t" << g.qmax << "\t" << g.qmin
       << "\t" << g.vg << "\t" << base_mva << "\t1\t999\t-999;\n";
  }
  os << "];\n";
  os << "mpc.branch = [\n";
  for (const auto& br : branches) {
    os << "\t" << br.from << "\t" << br.to << "\t" << br.r << "\t" << br.x << "\t" << br.b
       << "\t0\t0\t0\t" << br.ratio << "\t" << br.angle_deg << "\t" << br.status
       << "\t-360\t360;\n";
  }
  os << "];\n";
  return os.str();
}

// Slack feeding one load over a lossless reactance: bus 2 draws 10 MW through
// x = 0.1 pu. The solution has a closed-form check (see oracles.hpp).
inline std::string two_bus() {
  return make_case({{1, 3}, {2, 1, 10.0, 0.0}}, {{1}}, {{1, 2, 0.0, 0.1, 0.0}});
}

// Three buses in a chain, slack at one end: 1 -- 2 -- 3.
inline std::string path3() {
  return make_case({{1, 3}, {2, 1, 15.0, 5.0}, {3, 1, 25.0, 8.0}}, {{1}},
                   {{1, 2, 0.01, 0.05, 0.02}, {2, 3, 0.01, 0.05, 0.02}});
}

// Star with a loaded PQ center (bus 1) and three leaves, one of them slack.
inline std::string star4() {
  return make_case({{1, 1, 20.0, 6.0}, {2, 3}, {3, 1, 12.0, 4.0}, {4, 1, 9.0, 3.0}}, {{2}},
                   {{1, 2}, {1, 3}, {1, 4}});
}

// Fully connected 3-bus network: every closed neighborhood is the whole bus
// set, so the reduced additive kernel collapses to a single sub-kernel.
inline std::string complete3() {
  return make_case({{1, 3}, {2, 1, 18.0, 6.0}, {3, 1, 22.0, 7.0}}, {{1}},
                   {{1, 2}, {2, 3}, {1, 3}});
}

// Six-bus toy whose closed neighborhoods satisfy N[41] = {41,42} c N[42] and
// N[43] = {42,43,44} c N[42] = {41,42,43,44,8}, and no other containments:
// the subset reduction must drop exactly the sub-kernels owned by 41 and 43.
inline std::string triangle_toy() {
  return make_case({{7, 1, 11.0, 3.0},
                    {8, 1, 13.0, 4.0},
                    {41, 1, 17.0, 5.0},
                    {42, 3},
                    {43, 1, 19.0, 6.0},
                    {44, 1, 23.0, 7.0}},
                   {{42}},
                   {{41, 42}, {42, 43}, {42, 44}, {43, 44}, {44, 7}, {42, 8}, {7, 8}});
}

// Stylized 12-bus fragment with hub buses 5 and 12 whose closed neighborhoods
// are N[1] = {1,2,3}, N[5] = {3,4,5,6,8,11}, N[12] = {2,3,4,7,11,12,16,117}.
// An extra bus 999 hangs off bus 6 and carries the slack so that every
// fragment bus stays a load bus (with_bus7 = false drops bus 7, leaving the
// variant used for layer-decomposition checks).
inline std::string fragment12(bool with_bus7 = true) {
  std::vector<BusRow> buses = {{1, 1, 10.0, 3.0},  {2, 1, 11.0, 3.5},  {3, 1, 12.0, 4.0},
                               {4, 1, 13.0, 4.5},  {5, 1, 14.0, 5.0},  {6, 1, 15.0, 5.5},
                               {8, 1, 16.0, 6.0},  {11, 1, 17.0, 6.5}, {12, 1, 18.0, 7.0},
                               {16, 1, 19.0, 7.5}, {117, 1, 20.0, 8.0}, {999, 3}};
  std::vector<BranchRow> branches = {{1, 2},   {1, 3},   {2, 12}, {3, 12},  {4, 12},
                                     {11, 12}, {12, 16}, {12, 117}, {3, 5}, {4, 5},
                                     {5, 6},   {5, 8},   {5, 11}, {999, 6}};
  if (with_bus7) {
    buses.push_back({7, 1, 21.0, 8.5});
    branches.push_back({7, 12});
  }
  return make_case(buses, {{999}}, branches);
}

}  // namespace fixtures
