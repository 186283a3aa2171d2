#ifndef GFEIG_CONFIG_HPP
#define GFEIG_CONFIG_HPP

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gfeig/eigensolver.hpp"
#include "gfeig/errors.hpp"
#include "gfeig/grid.hpp"
#include "gfeig/problem_model.hpp"

namespace gfeig {

struct ConfigKey {
    std::string_view key;
    std::string_view default_value;
    std::string_view help;
};

// Flat "key = value" schema. Lists are comma separated; tables are "x:v" pairs.
inline constexpr ConfigKey kConfigSchema[] = {
    {"tau.kind", "constant", "constant | power_law | affine | tabulated"},
    {"tau.coeffs", "1", "constant: c; power_law: c,p; affine: c0,c1"},
    {"tau.table", "", "x:v pairs for tabulated"},
    {"beta.kind", "power_law", "constant | power_law | affine | tabulated"},
    {"beta.coeffs", "1,1", "as tau.coeffs"},
    {"beta.support", "0", "b with Supp beta = [b, inf)"},
    {"beta.table", "", "x:v pairs for tabulated"},
    {"kernel.kind", "uniform",
     "uniform | mitosis | equal_mitosis | renewal | homogeneous | mixture | beta_fragments | tabulated"},
    {"kernel.r", "0.5", "mitosis / mixture split"},
    {"kernel.alpha", "0", "homogeneous exponent"},
    {"kernel.rho", "0.5", "mixture weight of the renewal part"},
    {"kernel.gamma", "", "override of the small-fragment exponent"},
    {"kernel.C", "", "override of the small-fragment constant"},
    {"kernel.table", "", "kappa0 samples on a uniform z grid"},
    {"model.n", "2", "number of fragments"},
    {"model.mu", "0", "constant death rate"},
    {"model.xmin", "0", "minimal size"},
    {"grid.R", "20", "truncation size"},
    {"grid.N", "2000", "cells"},
    {"grid.kind", "uniform", "uniform | geometric"},
    {"grid.ratio", "1.01", "geometric growth ratio"},
    {"truncation.eta", "1e-6", "eta at the last stage"},
    {"solver.tol", "1e-12", "relative lambda tolerance"},
    {"solver.max_iter", "100000", "iteration cap"},
    {"solver.shift", "0", "initial shift, 0 for automatic"},
    {"solver.seed", "0", "seed of the restart start vectors"},
    {"solver.restarts", "0", "independent random restarts to cross-check lambda"},
    {"solver.override_audit", "false", "solve even when the audit reports a violation"},
    {"schedule.stages", "1", "continuation stages ending at (grid.R, grid.N, truncation.eta)"},
    {"schedule.R_growth", "2", "R ratio between stages"},
    {"schedule.eta_decay", "0.1", "eta ratio between stages"},
    {"schedule.N_scale", "true", "keep the cell width across stages"},
    {"schedule.richardson", "true", "also solve on the half grid"},
    {"evolve.T", "40", "final time"},
    {"evolve.cfl", "0.9", "fraction of the positivity step"},
    {"evolve.u0", "gaussian", "gaussian | random | eigen"},
    {"evolve.center", "3", "gaussian center"},
    {"evolve.width", "1", "gaussian width"},
    {"evolve.seed", "1", "random u0 seed"},
    {"evolve.threshold", "1e-3", "required H(T)/H(0)"},
    {"evolve.solve", "true", "solve for the eigentriple on the evolution grid"},
    {"evolve.triple", "", "eigentriple CSV from a previous solve"},
    {"study.N_list", "500,1000,2000", "grid refinement sweep"},
    {"study.r_list", "", "mitosis r sweep"},
    {"study.workers", "4", "parallel solves"},
    {"output.dir", "out", "output directory (GFEIG_OUTPUT_DIR overrides)"},
    {"output.stride", "100", "evolution record stride in steps"},
    {"output.formats", "csv,json", "csv and/or json"},
};

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto p = s.find(sep, start);
        out.push_back(trim(s.substr(start, p == std::string_view::npos ? s.size() - start : p - start)));
        if (p == std::string_view::npos) break;
        start = p + 1;
    }
    return out;
}

/// Resolved configuration: every schema key with either its default or a user value.
class RunConfig {
public:
    RunConfig() {
        for (const auto& k : kConfigSchema) values_[std::string(k.key)] = std::string(k.default_value);
    }

    static bool known(std::string_view key) {
        return std::any_of(std::begin(kConfigSchema), std::end(kConfigSchema),
                           [&](const ConfigKey& k) { return k.key == key; });
    }

    void set(const std::string& key, const std::string& value) {
        if (!known(key)) throw ConfigSyntaxError("unknown config key '" + key + "'");
        values_[key] = value;
    }

    /// "key=value" as given on the command line.
    void set_assignment(std::string_view kv) {
        const auto eq = kv.find('=');
        if (eq == std::string_view::npos) throw ConfigSyntaxError("expected key=value, got '" + std::string(kv) + "'");
        set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }

    const std::string& str(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ConfigSyntaxError("unknown config key '" + key + "'");
        return it->second;
    }

    double num(const std::string& key) const { return parse_double(key, str(key)); }

    std::size_t count(const std::string& key) const {
        const double v = num(key);
        if (!(v >= 0.0) || v != std::floor(v) || v > 1e15)
            throw ConfigurationError(key + " must be a nonnegative integer");
        return static_cast<std::size_t>(v);
    }

    bool flag(const std::string& key) const {
        const auto& v = str(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigurationError(key + " must be true or false");
    }

    std::vector<double> list(const std::string& key) const {
        std::vector<double> out;
        for (const auto& p : split(str(key), ',')) out.push_back(parse_double(key, p));
        return out;
    }

    std::vector<std::pair<double, double>> pairs(const std::string& key) const {
        std::vector<std::pair<double, double>> out;
        for (const auto& p : split(str(key), ',')) {
            const auto c = p.find(':');
            if (c == std::string::npos) throw ConfigurationError(key + " entries must be x:v");
            out.emplace_back(parse_double(key, p.substr(0, c)), parse_double(key, p.substr(c + 1)));
        }
        return out;
    }

    /// The fully resolved config as loadable text.
    std::string manifest() const {
        std::ostringstream os;
        os << "# gfeig manifest v1\n";
        for (const auto& k : kConfigSchema) os << k.key << " = " << values_.at(std::string(k.key)) << "\n";
        return os.str();
    }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    static double parse_double(const std::string& key, std::string_view text) {
        const std::string t = trim(text);
        double v = 0.0;
        const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (t.empty() || ec != std::errc() || p != t.data() + t.size())
            throw ConfigurationError(key + ": '" + t + "' is not a number");
        return v;
    }

    std::map<std::string, std::string> values_;
};

/// Parse "key = value" lines; '#' starts a comment.
inline RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigSyntaxError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        if (!RunConfig::known(key))
            throw ConfigSyntaxError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        cfg.set(key, trim(std::string_view(t).substr(eq + 1)));
    }
    return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigSyntaxError("cannot read config file '" + path + "'");
    return parse_config(in);
}

// ---------------------------------------------------------------------------
// Typed views
// ---------------------------------------------------------------------------

inline RateSpec rate_from(const RunConfig& c, const std::string& prefix, double support = 0.0) {
    const auto& kind = c.str(prefix + ".kind");
    const auto co = c.list(prefix + ".coeffs");
    auto need = [&](std::size_t n) {
        if (co.size() != n)
            throw ConfigurationError(prefix + ".coeffs needs " + std::to_string(n) + " values for " + kind);
    };
    if (kind == "constant") {
        need(1);
        return RateSpec::constant(co[0], support);
    }
    if (kind == "power_law") {
        need(2);
        return RateSpec::power_law(co[0], co[1], support);
    }
    if (kind == "affine") {
        need(2);
        return RateSpec::affine(co[0], co[1], support);
    }
    if (kind == "tabulated") return RateSpec::tabulated(c.pairs(prefix + ".table"), support);
    throw ConfigurationError(prefix + ".kind '" + kind + "' is not a rate kind");
}

inline KernelSpec kernel_from(const RunConfig& c) {
    const auto& kind = c.str("kernel.kind");
    KernelSpec k;
    if (kind == "uniform")
        k = KernelSpec::uniform();
    else if (kind == "mitosis")
        k = KernelSpec::mitosis(c.num("kernel.r"));
    else if (kind == "equal_mitosis")
        k = KernelSpec::equal_mitosis();
    else if (kind == "renewal")
        k = KernelSpec::renewal();
    else if (kind == "homogeneous")
        k = KernelSpec::homogeneous(c.num("kernel.alpha"));
    else if (kind == "mixture")
        k = KernelSpec::mixture(c.num("kernel.r"), c.num("kernel.rho"));
    else if (kind == "beta_fragments")
        k = KernelSpec::beta_fragments(c.num("model.n"));
    else if (kind == "tabulated") {
        const double g = c.str("kernel.gamma").empty() ? 0.0 : c.num("kernel.gamma");
        const double C = c.str("kernel.C").empty() ? 1.0 : c.num("kernel.C");
        return KernelSpec::tabulated(c.list("kernel.table"), g, C);
    } else
        throw ConfigurationError("kernel.kind '" + kind + "' is not a kernel kind");
    if (!c.str("kernel.gamma").empty()) k.gamma = c.num("kernel.gamma");
    if (!c.str("kernel.C").empty()) k.shattering_C = c.num("kernel.C");
    k.validate();
    return k;
}

inline ProblemSpec problem_from(const RunConfig& c) {
    ProblemSpec p;
    p.tau = rate_from(c, "tau");
    p.beta = rate_from(c, "beta", c.num("beta.support"));
    p.kernel = kernel_from(c);
    p.n_fragments = c.num("model.n");
    p.death_mu = RateSpec::constant(c.num("model.mu"));
    p.x_min = c.num("model.xmin");
    p.validate();
    return p;
}

inline GridKind grid_kind_from(const RunConfig& c) {
    const auto& k = c.str("grid.kind");
    if (k == "uniform") return GridKind::uniform;
    if (k == "geometric") return GridKind::geometric;
    throw ConfigurationError("grid.kind must be uniform or geometric");
}

inline Grid grid_from(const RunConfig& c) {
    return build_grid(c.num("grid.R"), c.count("grid.N"), grid_kind_from(c), c.num("grid.ratio"), c.num("model.xmin"));
}

inline SolverConfig solver_from(const RunConfig& c) {
    SolverConfig s;
    s.tol_lambda = c.num("solver.tol");
    s.max_iter = c.count("solver.max_iter");
    s.shift_nu = c.num("solver.shift");
    if (!(s.tol_lambda > 0.0)) throw ConfigurationError("solver.tol must be > 0");
    if (s.max_iter == 0) throw ConfigurationError("solver.max_iter must be > 0");
    return s;
}

inline Schedule schedule_from(const RunConfig& c) {
    const std::size_t K = c.count("schedule.stages");
    if (K == 0) throw ConfigurationError("schedule.stages must be >= 1");
    if (!(c.num("truncation.eta") > 0.0)) throw ConfigurationError("truncation.eta must be > 0");
    auto s = Schedule::ending_at(c.num("grid.R"), c.count("grid.N"), c.num("truncation.eta"), K,
                                 c.num("schedule.R_growth"), c.num("schedule.eta_decay"), c.flag("schedule.N_scale"),
                                 grid_kind_from(c), c.num("grid.ratio"));
    s.richardson = c.flag("schedule.richardson");
    return s;
}

}  // namespace gfeig

#endif  // GFEIG_CONFIG_HPP
