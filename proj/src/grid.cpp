#include "vdkflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace vdkflow {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Extract the numeric rows of "mpc.<name> = [ ... ];". Rows are ';'- or
// newline-terminated, '%' starts a comment.
std::vector<std::vector<double>> read_block(const std::string& text, const std::string& name) {
    const std::string key = "mpc." + name;
    size_t at = text.find(key);
    while (at != std::string::npos) {
        size_t eq = text.find_first_not_of(" \t", at + key.size());
        if (eq != std::string::npos && text[eq] == '=') break;
        at = text.find(key, at + key.size());
    }
    if (at == std::string::npos) throw MissingBlock(name);
    size_t open = text.find('[', at);
    size_t close = text.find(']', open);
    if (open == std::string::npos || close == std::string::npos) throw MissingBlock(name);

    std::vector<std::vector<double>> rows;
    std::string body = text.substr(open + 1, close - open - 1);
    std::stringstream ss(body);
    std::string line;
    int entry = 0;
    while (std::getline(ss, line)) {
        if (size_t pc = line.find('%'); pc != std::string::npos) line.erase(pc);
        // a row may end with ';' mid-line; treat each ';' chunk as one row
        std::stringstream chunks(line);
        std::string chunk;
        while (std::getline(chunks, chunk, ';')) {
            std::istringstream fields(chunk);
            std::vector<double> row;
            std::string tok;
            while (fields >> tok) {
                try {
                    size_t used = 0;
                    row.push_back(std::stod(tok, &used));
                    if (used != tok.size()) throw std::invalid_argument(tok);
                } catch (const std::exception&) {
                    throw MalformedRow(name, entry + 1);
                }
            }
            if (!row.empty()) {
                ++entry;
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

double read_base_mva(const std::string& text) {
    size_t at = text.find("mpc.baseMVA");
    if (at == std::string::npos) throw MissingBlock("baseMVA");
    size_t eq = text.find('=', at);
    size_t end = text.find(';', eq);
    if (eq == std::string::npos || end == std::string::npos) throw MissingBlock("baseMVA");
    try {
        return std::stod(text.substr(eq + 1, end - eq - 1));
    } catch (const std::exception&) {
        throw MalformedRow("baseMVA", 1);
    }
}

void check_connected(const Network& net) {
    std::vector<char> seen(net.buses.size(), 0);
    std::vector<int> stack{net.slack};
    seen[net.slack] = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int v : net.adjacency[u])
            if (!seen[v]) {
                seen[v] = 1;
                stack.push_back(v);
            }
    }
    int missing = static_cast<int>(std::count(seen.begin(), seen.end(), 0));
    if (missing > 0) throw DisconnectedGraph(missing);
}

std::string trim_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

int Network::index_of(int external_id) const {
    auto it = ext_to_int.find(external_id);
    if (it == ext_to_int.end())
        throw IndexOutOfRange("unknown bus id " + std::to_string(external_id));
    return it->second;
}

Network parse_case(const std::string& text) {
    Network net;
    net.base_mva = read_base_mva(text);

    auto bus_rows = read_block(text, "bus");
    auto gen_rows = read_block(text, "gen");
    auto branch_rows = read_block(text, "branch");
    if (text.find("mpc.gencost") != std::string::npos)
        std::cerr << "note: mpc.gencost present but ignored\n";

    int entry = 0;
    for (const auto& row : bus_rows) {
        ++entry;
        if (row.size() < 13) throw MalformedRow("bus", entry);
        Bus b;
        b.id = static_cast<int>(row[0]);
        int type = static_cast<int>(row[1]);
        if (type == 3)
            b.kind = BusKind::slack;
        else if (type == 2)
            b.kind = BusKind::pv;
        else if (type == 1)
            b.kind = BusKind::pq;
        else
            throw MalformedRow("bus", entry);
        b.p_load_mw = row[2];
        b.q_load_mvar = row[3];
        b.shunt_g_mw = row[4];
        b.shunt_b_mvar = row[5];
        b.base_v_mag = row[7];
        b.base_v_ang = row[8] * kDegToRad;
        if (b.base_v_mag <= 0.0) throw MalformedRow("bus", entry);
        int idx = static_cast<int>(net.buses.size());
        if (!net.ext_to_int.emplace(b.id, idx).second) throw MalformedRow("bus", entry);
        if (b.kind == BusKind::slack) {
            if (net.slack >= 0) throw MultipleSlack();
            net.slack = idx;
        }
        net.buses.push_back(b);
    }
    if (net.slack < 0) throw NoSlack();

    entry = 0;
    for (const auto& row : gen_rows) {
        ++entry;
        if (row.size() < 10) throw MalformedRow("gen", entry);
        if (row[7] == 0.0) continue;  // out-of-service unit
        Bus& b = net.buses[net.index_of(static_cast<int>(row[0]))];
        if (b.kind == BusKind::pq) {
            // a unit on a PQ-typed bus cannot regulate voltage; fold it into the load
            std::cerr << "warning: generator at pq bus " << b.id << " folded into load\n";
            b.p_load_mw -= row[1];
            b.q_load_mvar -= row[2];
            continue;
        }
        b.gen_p_mw += row[1];
        b.gen_q_mvar += row[2];
        b.gen_q_max_mvar += row[3];
        b.gen_q_min_mvar += row[4];
        b.gen_v_set = row[5];
        b.has_gen = true;
    }

    entry = 0;
    for (const auto& row : branch_rows) {
        ++entry;
        if (row.size() < 11) throw MalformedRow("branch", entry);
        Branch br;
        br.from = static_cast<int>(row[0]);
        br.to = static_cast<int>(row[1]);
        br.r = row[2];
        br.x = row[3];
        br.b_charging = row[4];
        br.tap_ratio = row[8] == 0.0 ? 1.0 : row[8];
        br.phase_shift = row[9] * kDegToRad;
        br.in_service = row[10] != 0.0;
        if (br.from == br.to) throw MalformedRow("branch", entry);
        if (br.r == 0.0 && br.x == 0.0) throw ZeroImpedanceBranch(br.from, br.to);
        net.index_of(br.from);
        net.index_of(br.to);
        net.branches.push_back(br);
    }

    net.adjacency.assign(net.buses.size(), {});
    {
        std::vector<std::set<int>> adj(net.buses.size());
        for (const auto& br : net.branches) {
            if (!br.in_service) continue;
            int f = net.index_of(br.from), t = net.index_of(br.to);
            adj[f].insert(t);
            adj[t].insert(f);
        }
        for (size_t i = 0; i < adj.size(); ++i)
            net.adjacency[i].assign(adj[i].begin(), adj[i].end());
    }
    check_connected(net);

    for (int i = 0; i < net.size(); ++i)
        if (net.buses[i].p_load_mw != 0.0 || net.buses[i].q_load_mvar != 0.0)
            net.load_bus_indices.push_back(i);

    net.ybus = build_ybus(net);
    return net;
}

Network load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open case file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str());
}

std::vector<int> neighborhood(const Network& net, int j) {
    if (j < 0 || j >= net.size())
        throw IndexOutOfRange("bus index " + std::to_string(j) + " out of range");
    std::vector<int> out = net.adjacency[j];
    out.insert(std::lower_bound(out.begin(), out.end(), j), j);
    return out;
}

Eigen::SparseMatrix<std::complex<double>> build_ybus(const Network& net) {
    using cd = std::complex<double>;
    const int n = net.size();
    std::vector<Eigen::Triplet<cd>> trip;
    trip.reserve(net.branches.size() * 4 + n);
    for (const auto& br : net.branches) {
        if (!br.in_service) continue;
        int f = net.index_of(br.from), t = net.index_of(br.to);
        cd ys = 1.0 / cd(br.r, br.x);
        cd ysh(0.0, br.b_charging / 2.0);
        cd tap = std::polar(br.tap_ratio, br.phase_shift);
        trip.emplace_back(f, f, (ys + ysh) / (tap * std::conj(tap)));
        trip.emplace_back(t, t, ys + ysh);
        trip.emplace_back(f, t, -ys / std::conj(tap));
        trip.emplace_back(t, f, -ys / tap);
    }
    for (int i = 0; i < n; ++i) {
        cd sh(net.buses[i].shunt_g_mw, net.buses[i].shunt_b_mvar);
        if (sh != cd(0.0, 0.0)) trip.emplace_back(i, i, sh / net.base_mva);
    }
    Eigen::SparseMatrix<cd> Y(n, n);
    Y.setFromTriplets(trip.begin(), trip.end());
    return Y;
}

std::string to_case_text(const Network& net) {
    std::ostringstream os;
    os << "function mpc = network\nmpc.version = '2';\nmpc.baseMVA = "
       << trim_number(net.base_mva) << ";\n\nmpc.bus = [\n";
    for (const auto& b : net.buses) {
        int type = b.kind == BusKind::slack ? 3 : (b.kind == BusKind::pv ? 2 : 1);
        os << '\t' << b.id << '\t' << type << '\t' << trim_number(b.p_load_mw) << '\t'
           << trim_number(b.q_load_mvar) << '\t' << trim_number(b.shunt_g_mw) << '\t'
           << trim_number(b.shunt_b_mvar) << "\t1\t" << trim_number(b.base_v_mag) << '\t'
           << trim_number(b.base_v_ang / kDegToRad) << "\t1\t1\t1.1\t0.9;\n";
    }
    os << "];\n\nmpc.gen = [\n";
    for (const auto& b : net.buses) {
        if (!b.has_gen) continue;
        os << '\t' << b.id << '\t' << trim_number(b.gen_p_mw) << '\t'
           << trim_number(b.gen_q_mvar) << '\t' << trim_number(b.gen_q_max_mvar) << '\t'
           << trim_number(b.gen_q_min_mvar) << '\t' << trim_number(b.gen_v_set)
           << '\t' << trim_number(net.base_mva) << "\t1\t0\t0;\n";
    }
    os << "];\n\nmpc.branch = [\n";
    for (const auto& br : net.branches) {
        os << '\t' << br.from << '\t' << br.to << '\t' << trim_number(br.r) << '\t'
           << trim_number(br.x) << '\t' << trim_number(br.b_charging) << "\t0\t0\t0\t"
           << trim_number(br.tap_ratio == 1.0 ? 0.0 : br.tap_ratio) << '\t'
           << trim_number(br.phase_shift / kDegToRad) << '\t' << (br.in_service ? 1 : 0)
           << "\t-360\t360;\n";
    }
    os << "];\n";
    return os.str();
}

std::string dump_json(const Network& net) {
    nlohmann::json j;
    j["base_mva"] = net.base_mva;
    j["n_bus"] = net.size();
    j["n_branch"] = net.branches.size();
    j["slack"] = net.buses[net.slack].id;
    auto& buses = j["buses"] = nlohmann::json::array();
    for (const auto& b : net.buses) {
        nlohmann::json e{{"id", b.id},
                         {"kind", b.kind == BusKind::slack ? "slack" : b.kind == BusKind::pv ? "pv" : "pq"},
                         {"p_load_mw", b.p_load_mw},
                         {"q_load_mvar", b.q_load_mvar},
                         {"base_v_mag", b.base_v_mag}};
        if (b.has_gen) e["gen_p_mw"] = b.gen_p_mw;
        buses.push_back(std::move(e));
    }
    auto& branches = j["branches"] = nlohmann::json::array();
    for (const auto& br : net.branches)
        branches.push_back({{"from", br.from},
                            {"to", br.to},
                            {"r", br.r},
                            {"x", br.x},
                            {"b", br.b_charging},
                            {"tap", br.tap_ratio},
                            {"shift", br.phase_shift},
                            {"in_service", br.in_service}});
    auto& loads = j["load_bus_ids"] = nlohmann::json::array();
    for (int i : net.load_bus_indices) loads.push_back(net.buses[i].id);
    return j.dump(2);
}

}  // namespace vdkflow
