#pragma once

#include <complex>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "vdkflow/errors.hpp"

namespace vdkflow {

enum class BusKind { slack, pv, pq };

struct Bus {
    int id = 0;                 // external bus number from the case file
    BusKind kind = BusKind::pq;
    double p_load_mw = 0.0;     // base load at system MVA base
    double q_load_mvar = 0.0;
    double shunt_g_mw = 0.0;    // GS/BS columns: MW/MVAr injected at V = 1 pu
    double shunt_b_mvar = 0.0;
    double base_v_mag = 1.0;    // stored Vm column (informational starting profile)
    double base_v_ang = 0.0;    // stored Va column, radians
    bool has_gen = false;
    double gen_p_mw = 0.0;      // summed over in-service units at the bus
    double gen_q_mvar = 0.0;
    double gen_q_min_mvar = 0.0;
    double gen_q_max_mvar = 0.0;
    double gen_v_set = 1.0;     // voltage setpoint (last unit wins, matching common practice)
};

struct Branch {
    int from = 0;               // external ids
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double b_charging = 0.0;    // total line-charging susceptance
    double tap_ratio = 1.0;     // 1.0 when the file says 0 (no transformer)
    double phase_shift = 0.0;   // radians
    bool in_service = true;
};

struct Network {
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<std::vector<int>> adjacency;   // internal indices, sorted, deduplicated
    Eigen::SparseMatrix<std::complex<double>> ybus;
    std::vector<int> load_bus_indices;         // internal indices with nonzero base load
    std::unordered_map<int, int> ext_to_int;
    int slack = -1;                            // internal index

    int size() const { return static_cast<int>(buses.size()); }

    // Internal index for an external bus number; throws IndexOutOfRange.
    int index_of(int external_id) const;
};

// Parse the MATPOWER text subset (baseMVA, bus, gen, branch blocks); validates all
// Network invariants (single slack, connectivity, nonzero impedances).
Network parse_case(const std::string& text);

// Read a file and parse it.
Network load_case(const std::string& path);

// The bus itself plus its direct neighbors, sorted by internal index.
std::vector<int> neighborhood(const Network& net, int j);

// Standard pi-model bus admittance matrix (taps, shifts, charging, shunts).
Eigen::SparseMatrix<std::complex<double>> build_ybus(const Network& net);

// Canonical case text such that parse_case(to_case_text(net)) == net field-by-field.
std::string to_case_text(const Network& net);

// Debug/CLI dump of the parsed model.
std::string dump_json(const Network& net);

}  // namespace vdkflow
