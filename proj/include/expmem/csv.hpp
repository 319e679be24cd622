#pragma once

#include <cstdio>
#include <limits>
#include <sstream>
#include <string>

#include "expmem/coeff_io.hpp"
#include "expmem/linop.hpp"
#include "expmem/ratapprox.hpp"
#include "expmem/solver.hpp"

namespace expmem {

// 12 significant digits, scientific, locale-independent.
inline std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.11e", x);
    return buf;
}

// s, K, K~, eps_F rows of a certification.
inline std::string laplace_error_csv(const CertSeries& series) {
    std::ostringstream out;
    out << "s,K,K̃,ε_F\n";
    for (std::size_t i = 0; i < series.x.size(); ++i)
        out << sci(series.x[i]) << ',' << sci(series.target[i]) << ',' << sci(series.fitted[i]) << ','
            << sci(series.err[i]) << '\n';
    return out.str();
}

// t, k, k~, eps_f rows of a certification.
inline std::string time_error_csv(const CertSeries& series) {
    std::ostringstream out;
    out << "t,k,k̃,ε_f\n";
    for (std::size_t i = 0; i < series.x.size(); ++i)
        out << sci(series.x[i]) << ',' << sci(series.target[i]) << ',' << sci(series.fitted[i]) << ','
            << sci(series.err[i]) << '\n';
    return out.str();
}

inline std::string energy_csv(const EnergyTrace& trace) {
    std::ostringstream out;
    out << "n,t,E,R,ratio\n";
    for (std::size_t i = 0; i < trace.level.size(); ++i) {
        const double e = trace.energy[i], r = trace.bound[i];
        const double ratio = r > 0.0 ? e / r : (e == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
        out << trace.level[i] << ',' << sci(trace.time[i]) << ',' << sci(e) << ',' << sci(r) << ',' << sci(ratio)
            << '\n';
    }
    return out.str();
}

inline std::string probe_csv(const std::vector<std::pair<double, double>>& probe) {
    std::ostringstream out;
    out << "n,t,value\n";
    for (std::size_t i = 0; i < probe.size(); ++i)
        out << i << ',' << sci(probe[i].first) << ',' << sci(probe[i].second) << '\n';
    return out.str();
}

// Full-field snapshot over the interior nodes.
inline std::string snapshot_csv(const GridLaplacian& grid, const Vector& field) {
    grid.check_dimension(field, "snapshot_csv");
    std::ostringstream out;
    out << "x1,x2,value\n";
    for (Eigen::Index idx = 0; idx < field.size(); ++idx) {
        const auto [x1, x2] = grid.node_coords(idx);
        out << sci(x1) << ',' << sci(x2) << ',' << sci(field[idx]) << '\n';
    }
    return out.str();
}

}  // namespace expmem
