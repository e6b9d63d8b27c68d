#include "serialize.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace berezin::detail {

std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

namespace {

json complex_json(cplx z) { return json::array({number(z.real()), number(z.imag())}); }

json points_json(const std::vector<cplx>& pts) {
    json a = json::array();
    for (const auto& p : pts) a.push_back(complex_json(p));
    return a;
}

}  // namespace

json to_json(const AffinePair& a) {
    return {{"t_star", number(a.t_star)}, {"x_star", complex_json(a.x_star)}};
}

json to_json(const Provenance& p) {
    return {{"symbol", p.symbol_id},
            {"phi", p.phi_id},
            {"tau", p.tau},
            {"h", number(p.h)},
            {"N", p.N},
            {"T", p.t_spec},
            {"z_density", p.z_density},
            {"cluster_tol", number(p.cluster_tol)},
            {"skipped_samples", p.skipped_samples},
            {"subgradient_samples", p.subgradient_samples}};
}

json to_json(const InequalityReport& r) {
    return {{"lhs", number(r.lhs)},
            {"rhs", number(r.rhs)},
            {"slack", number(r.slack)},
            {"nu1", number(r.nu1)},
            {"nu2", number(r.nu2)},
            {"nu1_raw", number(r.nu1_raw)},
            {"nu2_raw", number(r.nu2_raw)},
            {"trace_T", number(r.trace_T)},
            {"tolerance", number(r.tolerance)},
            {"pass", r.pass},
            {"phi_nonnegative", r.phi_nonnegative},
            {"complete_eigenvectors", r.complete_eigenvectors},
            {"provenance", to_json(r.provenance)}};
}

json to_json(const JensenReport& r) {
    return {{"lhs", number(r.lhs)}, {"rhs", number(r.rhs)}, {"c1", number(r.c1)},          {"c2", number(r.c2)},
            {"eps", number(r.eps)}, {"slack", number(r.slack)}, {"witness", to_json(r.witness)}};
}

json to_json(const SpectrumReport& s) {
    json clusters = json::array();
    for (const auto& c : s.clusters) clusters.push_back({{"center", complex_json(c.center)}, {"multiplicity", c.multiplicity}});
    json cond = json::array();
    for (double c : s.condition) cond.push_back(number(c));
    return {{"cluster_tol", number(s.cluster_tol)},
            {"clusters", clusters},
            {"eigenvalues", points_json(s.eigenvalues)},
            {"condition", cond}};
}

json to_json(const RangeHull& h) {
    json support = json::array();
    for (double v : h.support) support.push_back(number(v));
    return {{"n_angles", h.n_angles}, {"inner", points_json(h.inner)}, {"outer", points_json(h.outer)}, {"support", support}};
}

json to_json(const GardingResult& g) {
    return {{"nu", number(g.nu)},
            {"lambda_min_at_nu", number(g.lambda_min_at_nu)},
            {"lambda_min_below", number(g.lambda_min_below)},
            {"lower_certified", g.lower_certified}};
}

json to_json(const SweepTable& t) {
    json rows = json::array();
    for (const auto& r : t.rows) {
        json row = {{"sweep_value", number(r.sweep_value)}, {"lhs", number(r.lhs)}, {"rhs", number(r.rhs)},
                    {"slack", number(r.slack)},             {"nu1", number(r.nu1)}, {"nu2", number(r.nu2)},
                    {"trace_T", number(r.trace_T)}};
        for (const auto& [k, v] : r.aux) row[k] = number(v);
        rows.push_back(std::move(row));
    }
    return {{"name", t.name},
            {"fit_column", t.fit_column},
            {"fitted_exponent", number(t.fitted_exponent)},
            {"fit_residual", number(t.fit_residual)},
            {"rows", rows}};
}

void write_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    std::error_code ec;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << content;
    if (!out) throw ConfigError("write to '" + path + "' failed");
}

}  // namespace berezin::detail
