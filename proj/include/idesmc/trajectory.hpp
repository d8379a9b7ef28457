#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace idesmc {

/// Uniform-grid simulation record: states, applied inputs, outputs and named
/// scalar aux channels, all sharing the grid length. Immutable by convention
/// once returned from a simulator.
struct Trajectory {
    double t0 = 0.0;
    double h = 0.0;
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    std::vector<Eigen::VectorXd> inputs;   // may be empty (open loop)
    std::vector<Eigen::VectorXd> outputs;  // may be empty
    std::map<std::string, std::vector<double>> aux;

    size_t size() const { return times.size(); }
    int state_dim() const { return states.empty() ? 0 : static_cast<int>(states[0].size()); }
    int input_dim() const { return inputs.empty() ? 0 : static_cast<int>(inputs[0].size()); }
    int output_dim() const { return outputs.empty() ? 0 : static_cast<int>(outputs[0].size()); }

    const std::vector<double>& aux_channel(const std::string& name) const {
        auto it = aux.find(name);
        if (it == aux.end()) throw std::invalid_argument("Trajectory: no aux channel " + name);
        return it->second;
    }
};

namespace detail {
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace detail

/// CSV layout: t, x_1..x_n, y_1..y_k, u_1..u_m, then aux channels by name.
/// Header row mandatory, values at 17 significant digits.
inline void write_csv(const Trajectory& traj, std::ostream& os) {
    os << "t";
    for (int i = 1; i <= traj.state_dim(); ++i) os << ",x_" << i;
    for (int i = 1; i <= traj.output_dim(); ++i) os << ",y_" << i;
    for (int i = 1; i <= traj.input_dim(); ++i) os << ",u_" << i;
    for (const auto& [name, chan] : traj.aux) os << "," << name;
    os << "\n";
    for (size_t k = 0; k < traj.size(); ++k) {
        os << detail::fmt17(traj.times[k]);
        for (int i = 0; i < traj.state_dim(); ++i) os << "," << detail::fmt17(traj.states[k](i));
        for (int i = 0; i < traj.output_dim(); ++i) os << "," << detail::fmt17(traj.outputs[k](i));
        for (int i = 0; i < traj.input_dim(); ++i) os << "," << detail::fmt17(traj.inputs[k](i));
        for (const auto& [name, chan] : traj.aux) os << "," << detail::fmt17(chan.at(k));
        os << "\n";
    }
}

inline void write_csv_file(const Trajectory& traj, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_csv_file: cannot open " + path);
    write_csv(traj, os);
}

inline Trajectory read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("read_csv: empty stream");
    std::vector<std::string> names;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) names.push_back(cell);
    }
    if (names.empty() || names[0] != "t") throw std::runtime_error("read_csv: bad header");
    int n = 0, k = 0, m = 0;
    size_t col = 1;
    auto count_prefix = [&](const std::string& p) {
        int c = 0;
        while (col < names.size() && names[col].rfind(p, 0) == 0) { ++c; ++col; }
        return c;
    };
    n = count_prefix("x_");
    k = count_prefix("y_");
    m = count_prefix("u_");
    std::vector<std::string> aux_names(names.begin() + static_cast<long>(col), names.end());

    Trajectory tr;
    for (const auto& a : aux_names) tr.aux[a] = {};
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != names.size()) throw std::runtime_error("read_csv: ragged row");
        size_t c = 0;
        tr.times.push_back(row[c++]);
        Eigen::VectorXd x(n), y(k), u(m);
        for (int i = 0; i < n; ++i) x(i) = row[c++];
        for (int i = 0; i < k; ++i) y(i) = row[c++];
        for (int i = 0; i < m; ++i) u(i) = row[c++];
        tr.states.push_back(x);
        if (k > 0) tr.outputs.push_back(y);
        if (m > 0) tr.inputs.push_back(u);
        for (const auto& a : aux_names) tr.aux[a].push_back(row[c++]);
    }
    if (tr.times.size() >= 2) {
        tr.t0 = tr.times.front();
        tr.h = tr.times[1] - tr.times[0];
    }
    return tr;
}

inline Trajectory read_csv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_csv_file: cannot open " + path);
    return read_csv(is);
}

}  // namespace idesmc
