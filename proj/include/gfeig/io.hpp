#ifndef GFEIG_IO_HPP
#define GFEIG_IO_HPP

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfeig/eigensolver.hpp"
#include "gfeig/errors.hpp"
#include "gfeig/evolution.hpp"

namespace gfeig::io {

inline constexpr int kSchemaVersion = 1;

// Every CSV starts with "# gfeig <table> v<version>" and a column header line.

inline void csv_header(std::ostream& os, std::string_view table, std::string_view columns) {
    os << "# gfeig " << table << " v" << kSchemaVersion << "\n" << columns << "\n";
    os << std::setprecision(17);
}

inline void write_triple_csv(std::ostream& os, const EigenTriple& t) {
    os << "# gfeig eigentriple v" << kSchemaVersion << "\n" << std::setprecision(17) << "# lambda=" << t.lambda
       << "\nx,U,phi,tauU\n";
    for (std::size_t j = 0; j < t.U.size(); ++j)
        os << t.grid.centers[j] << ',' << t.U[j] << ',' << t.phi[j] << ',' << t.tau[j] * t.U[j] << '\n';
}

struct TripleSamples {
    double lambda = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> x, U, phi;
};

/// Inverse of write_triple_csv (only the sampled columns).
inline TripleSamples read_triple_csv(std::istream& in) {
    TripleSamples s;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.rfind("# lambda=", 0) == 0) {
            s.lambda = std::stod(line.substr(9));
            continue;
        }
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line.rfind("x,U,phi", 0) != 0) throw ConfigurationError("eigentriple CSV has an unexpected header");
            header = true;
            continue;
        }
        std::istringstream ls(line);
        std::string cell;
        double v[3];
        for (double& x : v) {
            if (!std::getline(ls, cell, ',')) throw ConfigurationError("eigentriple CSV row is short");
            x = std::stod(cell);
        }
        s.x.push_back(v[0]);
        s.U.push_back(v[1]);
        s.phi.push_back(v[2]);
    }
    if (s.x.empty()) throw ConfigurationError("eigentriple CSV is empty");
    if (std::isnan(s.lambda)) throw ConfigurationError("eigentriple CSV does not record lambda");
    return s;
}

inline void write_stages_csv(std::ostream& os, const ContinuationResult& r) {
    csv_header(os, "stages", "stage,R,eta,delta,N,lambda,lambda_coarse,lambda_richardson,moment_lambda,first_moment");
    for (std::size_t k = 0; k < r.stages.size(); ++k) {
        const auto& s = r.stages[k];
        os << k << ',' << s.stage.R << ',' << s.stage.eta << ',' << s.delta << ',' << s.stage.N << ',' << s.lambda
           << ',' << s.lambda_coarse << ',' << s.lambda_richardson << ',' << s.moment_lambda << ','
           << s.first_moment << '\n';
    }
}

inline void write_ledger_csv(std::ostream& os, const EvolutionState& s) {
    csv_header(os, "ledger", "t,number,mass,beta_moment,tau_moment");
    for (const auto& r : s.ledger)
        os << r.t << ',' << r.number << ',' << r.mass << ',' << r.beta_moment << ',' << r.tau_moment << '\n';
}

/// Entropy series thinned to every `stride`-th step plus the last one.
inline void write_entropy_csv(std::ostream& os, const EvolutionState& s, std::size_t stride) {
    csv_header(os, "entropy", "t,H,pairing");
    const auto& e = s.entropy_series;
    for (std::size_t k = 0; k < e.size(); ++k)
        if (stride == 0 || k % stride == 0 || k + 1 == e.size())
            os << e[k].t << ',' << e[k].H << ',' << e[k].pairing << '\n';
}

inline void write_trajectory_csv(std::ostream& os, const EvolutionState& s) {
    csv_header(os, "trajectory", "t,x,u");
    for (const auto& snap : s.snapshots)
        for (std::size_t j = 0; j < snap.u.size(); ++j) os << snap.t << ',' << s.grid.centers[j] << ',' << snap.u[j] << '\n';
}

/// JSON number or null for NaN / infinity.
inline nlohmann::json number(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

inline nlohmann::json triple_summary(const EigenTriple& t) {
    return {{"lambda", number(t.lambda)},
            {"lambda_dual", number(t.lambda_dual)},
            {"N", t.U.size()},
            {"R", t.grid.R},
            {"delta", number(t.delta)},
            {"support_infimum", number(t.support_infimum_m)},
            {"residual_direct", number(t.residual_direct)},
            {"residual_dual", number(t.residual_dual)},
            {"iterations", t.iterations},
            {"shift", number(t.shift)},
            {"first_moment", number(t.first_moment())},
            {"dual_growth",
             {{"k", t.dual_growth.k}, {"theta", t.dual_growth.theta}, {"C", t.dual_growth.C},
              {"holds", t.dual_growth.holds}}}};
}

inline nlohmann::json continuation_summary(const ContinuationResult& r) {
    nlohmann::json j;
    j["verdict"] = std::string(to_string(r.verdict));
    j["message"] = r.message;
    j["extrapolated_lambda"] = number(r.extrapolated_lambda);
    j["observed_order"] = number(r.observed_order);
    j["positive_lambda_R"] = r.positive_lambda_R ? nlohmann::json(*r.positive_lambda_R) : nlohmann::json(nullptr);
    for (const auto& s : r.stages)
        j["stages"].push_back({{"R", s.stage.R},
                               {"eta", s.stage.eta},
                               {"N", s.stage.N},
                               {"delta", s.delta},
                               {"lambda", number(s.lambda)},
                               {"lambda_richardson", number(s.lambda_richardson)},
                               {"moment_lambda", number(s.moment_lambda)},
                               {"first_moment", number(s.first_moment)},
                               {"seconds", s.seconds}});
    return j;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ConfigurationError("cannot write '" + path + "'");
    out << text;
}

}  // namespace gfeig::io

#endif  // GFEIG_IO_HPP
