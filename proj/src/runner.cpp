#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>

#include "berezin/error.hpp"
#include "berezin/inequality.hpp"
#include "berezin/jensen.hpp"
#include "berezin/runner.hpp"
#include "serialize.hpp"
#include "text.hpp"

namespace berezin {

namespace {

using detail::csv_number;
using detail::json;
using detail::number;

struct Check {
    std::string name;
    bool pass = true;
    std::string detail;
    long first_bad = -1;  // index into the reports array
};

// Rows of text cells under a header; cells are already formatted.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string csv() const {
        std::string s;
        for (std::size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
        s += "\n";
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + r[i];
            s += "\n";
        }
        return s;
    }
};

struct Outcome {
    Table table;
    json reports = json::array();
    json extra = json::object();
    std::vector<Check> checks;
    std::size_t n_rows = 0;
};

std::string fmt(double v) { return csv_number(v); }

// Minimum of `values` against `bound`, recording the first index below it.
Check min_check(const std::string& name, const std::vector<double>& values, double bound) {
    Check c;
    c.name = name;
    double worst = HUGE_VAL;
    for (std::size_t i = 0; i < values.size(); ++i) {
        worst = std::min(worst, values[i]);
        if (!(values[i] >= bound) && c.first_bad < 0) c.first_bad = static_cast<long>(i);
    }
    c.pass = c.first_bad < 0;
    c.detail = "min " + fmt(values.empty() ? 0.0 : worst) + " >= " + fmt(bound);
    return c;
}

Check max_abs_check(const std::string& name, const std::vector<double>& values, double bound) {
    Check c;
    c.name = name;
    double worst = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        worst = std::max(worst, std::abs(values[i]));
        if (!(std::abs(values[i]) <= bound) && c.first_bad < 0) c.first_bad = static_cast<long>(i);
    }
    c.pass = c.first_bad < 0;
    c.detail = "max |value| " + fmt(worst) + " <= " + fmt(bound);
    return c;
}

std::string limits_text(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
    return s;
}

ConvexFunction resolve_phi(const std::string& spec) {
    if (spec.rfind("file:", 0) == 0) return ConvexFunction::load_csv(spec.substr(5));
    return ConvexFunction::from_id(spec);
}

std::vector<ConvexFunction> resolve_phis(const ExperimentConfig& c) {
    std::vector<ConvexFunction> out;
    for (const auto& id : c.list("phi", "ids")) out.push_back(resolve_phi(id));
    if (out.empty()) throw ConfigError(c.origin() + ": [phi] ids is empty");
    return out;
}

// Confirms a symbol preset resolves before any experiment runs.
void validate_symbol(const std::string& id) {
    if (id.rfind("file:", 0) == 0) throw ConfigError("symbol files are not accepted here ('" + id + "')");
    symbol_from_id(PhaseGrid(8, 1.0), id);
}

SymbolGrid resolve_symbol(const PhaseGrid& g, const std::string& spec) {
    if (spec.rfind("file:", 0) == 0) return load_symbol_csv(spec.substr(5), g);
    return symbol_from_id(g, spec);
}

std::size_t trials_of(const ExperimentConfig& c, long fallback) {
    const long t = c.integer_or("experiment", "trials", fallback);
    if (t < 0) throw ConfigError(c.origin() + ": [experiment] trials must be >= 0");
    return static_cast<std::size_t>(t);
}

std::pair<int, int> dims_of(const ExperimentConfig& c, int lo, int hi) {
    const long a = c.integer_or("grid", "dim_min", lo), b = c.integer_or("grid", "dim_max", hi);
    if (a < 1 || b < a) throw ConfigError(c.origin() + ": [grid] needs 1 <= dim_min <= dim_max");
    return {static_cast<int>(a), static_cast<int>(b)};
}

Eigen::MatrixXcd gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    Eigen::MatrixXcd M(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) {
            const double re = nd(rng);
            M(i, j) = cplx(re, nd(rng));
        }
    return M;
}

bool is_affine(const ConvexFunction& phi) {
    if (phi.dimension() != 1) return false;
    const auto* p = std::get_if<repr::Preset1D>(&phi.representation());
    return p != nullptr && p->kind == repr::PresetKind::Support && p->lo == p->hi;
}

// ---------------------------------------------------------------------------------------------

Outcome run_projected(const ExperimentConfig& c, std::uint64_t seed, int workers) {
    const std::size_t trials = trials_of(c, 1000);
    const auto [dmin, dmax] = dims_of(c, 2, 10);
    const auto phis = resolve_phis(c);
    for (const auto& phi : phis)
        if (phi.dimension() != 1) throw ConfigError(c.origin() + ": projected suite needs functions on R");
    const double min_slack = c.number_or("checks", "min_slack", -1e-9);
    const double affine_tol = c.number_or("checks", "affine_abs_slack", 1e-10);

    struct Trial {
        int dim = 0, rank = 0;
        std::size_t phi = 0;
        InequalityReport report;
    };
    std::vector<Trial> out(trials);
    parallel_for(trials, workers, [&](std::size_t i) {
        auto rng = trial_rng(seed, i);
        const int n = std::uniform_int_distribution<int>(dmin, dmax)(rng);
        const int r = std::uniform_int_distribution<int>(1, n)(rng);
        const Eigen::MatrixXcd G = gaussian(n, n, rng);
        const Eigen::MatrixXcd B = (G + G.adjoint()) / (2.0 * std::sqrt(static_cast<double>(n)));
        const Eigen::MatrixXcd V = gaussian(n, r, rng);
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(V);
        const Eigen::MatrixXcd Q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, r);
        Eigen::MatrixXcd P = Q * Q.adjoint();
        P = herm(P);
        out[i] = {n, r, i % phis.size(), projected_berezin_check(B, P, phis[i % phis.size()])};
    });

    Outcome o;
    o.table.header = {"trial", "dim", "rank", "phi", "lhs", "rhs", "slack"};
    std::vector<double> slack, affine_slack;
    for (std::size_t i = 0; i < trials; ++i) {
        const auto& t = out[i];
        o.table.rows.push_back({std::to_string(i), std::to_string(t.dim), std::to_string(t.rank), phis[t.phi].id(),
                                fmt(t.report.lhs), fmt(t.report.rhs), fmt(t.report.slack)});
        json j = detail::to_json(t.report);
        j["trial"] = i;
        j["dim"] = t.dim;
        j["rank"] = t.rank;
        o.reports.push_back(std::move(j));
        slack.push_back(t.report.slack);
        affine_slack.push_back(is_affine(phis[t.phi]) ? t.report.slack : 0.0);
    }
    o.checks.push_back(min_check("slack", slack, min_slack));
    o.checks.push_back(max_abs_check("affine_equality", affine_slack, affine_tol));
    o.n_rows = trials;
    return o;
}

Outcome run_lemma3(const ExperimentConfig& c, std::uint64_t seed, int workers) {
    const std::size_t trials = trials_of(c, 200);
    const auto [nmin, nmax] = dims_of(c, 2, 16);
    const auto phis = resolve_phis(c);
    for (const auto& phi : phis)
        if (phi.dimension() != 1) throw ConfigError(c.origin() + ": lemma3 suite needs functions on R");
    const std::vector<std::string> pairs =
        c.has("suite", "pairs") ? c.list("suite", "pairs")
                                : std::vector<std::string>{"weighted_average", "point_evaluation", "eigenvalue_rank"};
    for (const auto& p : pairs)
        if (p != "weighted_average" && p != "point_evaluation" && p != "eigenvalue_rank")
            throw ConfigError(c.origin() + ": unknown functional pair '" + p + "'");
    const double min_slack = c.number_or("checks", "min_slack", -1e-8);
    const double average_tol = c.number_or("checks", "average_defect", 1e-12);

    struct Trial {
        int nodes = 0;
        std::size_t pair = 0, phi = 0;
        JensenReport report;
    };
    std::vector<Trial> out(trials);
    parallel_for(trials, workers, [&](std::size_t i) {
        auto rng = trial_rng(seed, i);
        const int n = std::uniform_int_distribution<int>(nmin, nmax)(rng);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> sigma(n);
        for (auto& s : sigma) s = u(rng);
        const std::size_t pk = i % pairs.size(), fk = (i / pairs.size()) % phis.size();
        FunctionalPair pair;
        if (pairs[pk] == "weighted_average") {
            std::vector<double> w(n);
            std::vector<std::size_t> nodes(n);
            double total = 0.0;
            for (int k = 0; k < n; ++k) {
                w[k] = -std::log(1.0 - u(rng));
                total += w[k];
                nodes[k] = static_cast<std::size_t>(k);
            }
            for (auto& x : w) x /= total;
            pair = FunctionalPair::weighted_average(w, nodes);
        } else if (pairs[pk] == "point_evaluation") {
            pair = FunctionalPair::point_evaluation(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
        } else {
            pair = FunctionalPair::eigenvalue_rank(laplacian_1d(n), std::uniform_int_distribution<int>(1, n)(rng));
        }
        out[i] = {n, pk, fk, check_lemma3(pair, real_grid_function(sigma), phis[fk])};
    });

    Outcome o;
    o.table.header = {"trial", "pair", "phi", "nodes", "lhs", "rhs", "c1", "c2", "eps", "slack"};
    std::vector<double> slack, avg_defect;
    for (std::size_t i = 0; i < trials; ++i) {
        const auto& t = out[i];
        const auto& r = t.report;
        o.table.rows.push_back({std::to_string(i), pairs[t.pair], phis[t.phi].id(), std::to_string(t.nodes), fmt(r.lhs),
                                fmt(r.rhs), fmt(r.c1), fmt(r.c2), fmt(r.eps), fmt(r.slack)});
        json j = detail::to_json(r);
        j["trial"] = i;
        j["pair"] = pairs[t.pair];
        j["phi"] = phis[t.phi].id();
        o.reports.push_back(std::move(j));
        slack.push_back(r.slack);
        avg_defect.push_back(pairs[t.pair] == "weighted_average" ? std::max(r.c1, r.c2) : 0.0);
    }
    o.checks.push_back(min_check("slack", slack, min_slack));
    o.checks.push_back(max_abs_check("weighted_average_defects", avg_defect, average_tol));
    o.n_rows = trials;
    return o;
}

Outcome run_example4(const ExperimentConfig& c, std::uint64_t seed, int workers) {
    const std::size_t trials = trials_of(c, 200);
    const auto [dmin, dmax] = dims_of(c, 2, 16);
    const auto phis = resolve_phis(c);
    for (const auto& phi : phis)
        if (phi.dimension() != 1) throw ConfigError(c.origin() + ": example4 suite needs functions on R");
    const double min_slack = c.number_or("checks", "min_slack", -1e-8);

    struct Row {
        std::size_t trial = 0;
        int dim = 0, rank = 0;
        std::size_t phi = 0;
        double lambda = 0.0, sup_sigma = 0.0, F_extended = 0.0;
        JensenReport report;
    };
    std::vector<std::vector<Row>> out(trials);
    parallel_for(trials, workers, [&](std::size_t i) {
        auto rng = trial_rng(seed, i);
        const int n = std::uniform_int_distribution<int>(dmin, dmax)(rng);
        std::uniform_real_distribution<double> sym(-1.0, 1.0), u(0.0, 1.0);
        // A = B B^T with B lower bidiagonal: tridiagonal and positive semidefinite.
        Eigen::MatrixXd Bd = Eigen::MatrixXd::Zero(n, n);
        for (int k = 0; k < n; ++k) {
            Bd(k, k) = sym(rng);
            if (k + 1 < n) Bd(k + 1, k) = sym(rng);
        }
        const Eigen::MatrixXd A = Bd * Bd.transpose();
        std::vector<double> sigma(n);
        for (auto& s : sigma) s = u(rng);
        const double sup_sigma = *std::max_element(sigma.begin(), sigma.end());
        const std::size_t fk = i % phis.size();
        for (int rank = 1; rank <= n; ++rank) {
            const double lam = rayleigh_eigenvalue(A, sigma, rank);
            out[i].push_back({i, n, rank, fk, lam, sup_sigma, example4_error_extended(sigma, phis[fk], lam),
                              example4_check(A, sigma, phis[fk], rank)});
        }
    });

    Outcome o;
    o.table.header = {"trial", "dim",   "rank",       "phi",           "lambda", "sup_sigma", "lhs",
                      "rhs",   "F",     "slack",      "F_extended",    "slack_extended"};
    std::vector<double> slack, slack_in_range, slack_ext, pospart_F;
    for (const auto& trial : out)
        for (const auto& r : trial) {
            const double ext = r.report.slack - r.report.c1 + r.F_extended;
            o.table.rows.push_back({std::to_string(r.trial), std::to_string(r.dim), std::to_string(r.rank),
                                    phis[r.phi].id(), fmt(r.lambda), fmt(r.sup_sigma), fmt(r.report.lhs),
                                    fmt(r.report.rhs), fmt(r.report.c1), fmt(r.report.slack), fmt(r.F_extended),
                                    fmt(ext)});
            json j = detail::to_json(r.report);
            j["trial"] = r.trial;
            j["rank"] = r.rank;
            j["phi"] = phis[r.phi].id();
            j["lambda"] = number(r.lambda);
            j["sup_sigma"] = number(r.sup_sigma);
            j["F"] = number(r.report.c1);
            j["F_extended"] = number(r.F_extended);
            j["slack_extended"] = number(ext);
            o.reports.push_back(std::move(j));
            slack.push_back(r.report.slack);
            slack_in_range.push_back(r.lambda <= r.sup_sigma ? r.report.slack : 0.0);
            slack_ext.push_back(ext);
            pospart_F.push_back(phis[r.phi].id() == "pospart" ? r.report.c1 : 0.0);
        }
    // The displayed F bounds the tangent slope at lambda_n by the slope at sup sigma, which needs
    // lambda_n <= sup sigma; the extended F covers the remaining rows.
    o.checks.push_back(min_check("slack", slack, min_slack));
    o.checks.push_back(min_check("slack_lambda_in_range", slack_in_range, min_slack));
    o.checks.push_back(min_check("slack_extended", slack_ext, min_slack));
    o.checks.push_back(max_abs_check("pospart_F_zero", pospart_F, 0.0));
    o.n_rows = slack.size();
    return o;
}

Outcome run_garding(const ExperimentConfig& c, std::uint64_t seed, int workers) {
    const std::size_t trials = trials_of(c, 200);
    const auto [dmin, dmax] = dims_of(c, 2, 12);
    const double upper_tol = c.number_or("checks", "upper_certificate", -1e-10);

    struct Trial {
        int dim = 0;
        GardingResult g;
    };
    std::vector<Trial> out(trials);
    parallel_for(trials, workers, [&](std::size_t i) {
        auto rng = trial_rng(seed, i);
        const int n = std::uniform_int_distribution<int>(dmin, dmax)(rng);
        Eigen::MatrixXcd S = gaussian(n, n, rng);
        // Every fourth instance is shifted to be positive, exercising nu = 0.
        if (i % 4 == 0) S += (S.operatorNorm() + 0.5) * Eigen::MatrixXcd::Identity(n, n);
        const Eigen::MatrixXcd G = gaussian(n, n, rng);
        const Eigen::MatrixXcd T = G * G.adjoint() / static_cast<double>(n) + 0.1 * Eigen::MatrixXcd::Identity(n, n);
        out[i] = {n, garding(S, herm(T))};
    });

    Outcome o;
    o.table.header = {"trial", "dim", "nu", "lambda_min_at_nu", "lambda_min_below", "lower_certified"};
    std::vector<double> upper, lower;
    for (std::size_t i = 0; i < trials; ++i) {
        const auto& t = out[i];
        o.table.rows.push_back({std::to_string(i), std::to_string(t.dim), fmt(t.g.nu), fmt(t.g.lambda_min_at_nu),
                                fmt(t.g.lambda_min_below), t.g.lower_certified ? "1" : "0"});
        json j = detail::to_json(t.g);
        j["trial"] = i;
        j["dim"] = t.dim;
        o.reports.push_back(std::move(j));
        upper.push_back(t.g.lambda_min_at_nu);
        lower.push_back(t.g.lower_certified ? 1.0 : 0.0);
    }
    o.checks.push_back(min_check("upper_certificate", upper, upper_tol));
    o.checks.push_back(min_check("lower_certificate", lower, 1.0));
    o.n_rows = trials;
    return o;
}

// Dual nodes and values of a sampled 1D conjugate.
const repr::Sampled1D& sampled1d(const ConvexFunction& f) {
    const auto* s = std::get_if<repr::Sampled1D>(&f.representation());
    if (s == nullptr) throw PreconditionError("expected a sampled function on R");
    return *s;
}

struct ConjugateRow {
    std::string phi;
    std::size_t nodes = 0;
    double gap = 0.0;
    double direct_error = 0.0;
    double fenchel_young_min = 0.0;
};

ConjugateRow conjugate_row(const ConvexFunction& phi) {
    ConjugateRow row;
    row.phi = phi.id();
    const ConvexFunction cj = conjugate(phi);
    row.gap = biconjugate_gap(phi);
    if (phi.dimension() == 1) {
        const auto& s = sampled1d(phi);
        const auto& d = sampled1d(cj);
        row.nodes = s.x.size();
        double fy = HUGE_VAL, err = 0.0;
        for (std::size_t k = 0; k < d.x.size(); ++k) {
            double direct = -HUGE_VAL;
            for (std::size_t i = 0; i < s.x.size(); ++i)
                if (s.f[i].is_finite()) direct = std::max(direct, d.x[k] * s.x[i] - s.f[i].value());
            err = std::max(err, std::abs(d.f[k].to_double() - direct) / (1.0 + std::abs(direct)));
            for (std::size_t i = 0; i < s.x.size(); ++i)
                if (s.f[i].is_finite() && d.f[k].is_finite())
                    fy = std::min(fy, s.f[i].value() + d.f[k].value() - d.x[k] * s.x[i]);
        }
        row.direct_error = err;
        row.fenchel_young_min = fy;
    } else {
        const auto* s = std::get_if<repr::Sampled2D>(&phi.representation());
        const auto* d = std::get_if<repr::Sampled2D>(&cj.representation());
        if (s == nullptr || d == nullptr) throw PreconditionError("conjugate suite: 2D input must be sampled");
        row.nodes = s->f.size();
        double fy = HUGE_VAL;
        for (std::size_t a = 0; a < d->x.size(); ++a)
            for (std::size_t b = 0; b < d->y.size(); ++b) {
                const ExtendedReal v = d->at(a, b);
                if (v.is_infinite()) continue;
                for (std::size_t i = 0; i < s->x.size(); ++i)
                    for (std::size_t j = 0; j < s->y.size(); ++j)
                        if (s->at(i, j).is_finite())
                            fy = std::min(fy, s->at(i, j).value() + v.value() - d->x[a] * s->x[i] - d->y[b] * s->y[j]);
            }
        row.fenchel_young_min = fy;
    }
    return row;
}

ConvexFunction random_piecewise_linear(std::mt19937_64& rng) {
    const int n = std::uniform_int_distribution<int>(9, 65)(rng);
    std::uniform_real_distribution<double> start(-5.0, 0.0), step(0.1, 1.0), slope(-3.0, 3.0), off(-1.0, 1.0);
    std::vector<double> x(n), s(n - 1);
    x[0] = start(rng);
    for (int i = 1; i < n; ++i) x[i] = x[i - 1] + step(rng);
    for (auto& v : s) v = slope(rng);
    std::sort(s.begin(), s.end());
    std::vector<ExtendedReal> f(n);
    double acc = off(rng);
    f[0] = acc;
    for (int i = 1; i < n; ++i) {
        acc += s[i - 1] * (x[i] - x[i - 1]);
        f[i] = acc;
    }
    return ConvexFunction::sampled(std::move(x), std::move(f), "random_pl");
}

Outcome run_conjugate(const ExperimentConfig& c, std::uint64_t seed, int workers) {
    const std::size_t trials = trials_of(c, 0);
    std::vector<ConvexFunction> phis;
    if (c.has("phi", "ids")) {
        const long n = c.integer_or("grid", "nodes", 201);
        const double lo = c.number_or("grid", "lo", -3.0), hi = c.number_or("grid", "hi", 3.0);
        if (n < 2 || !(lo < hi)) throw ConfigError(c.origin() + ": [grid] needs nodes >= 2 and lo < hi");
        for (const auto& id : c.list("phi", "ids")) {
            ConvexFunction f = resolve_phi(id);
            if (!f.is_sampled()) {
                if (f.dimension() != 1) throw ConfigError(c.origin() + ": closed-form 2D functions are not sampled here");
                f = ConvexFunction::sample(f, lo, hi, static_cast<std::size_t>(n));
            }
            phis.push_back(std::move(f));
        }
    }
    const double max_direct = c.number_or("checks", "max_direct_error", 1e-12);
    const double min_fy = c.number_or("checks", "fenchel_young", -1e-10);
    const bool gap_checked = c.has("checks", "max_gap");
    const double max_gap = c.number_or("checks", "max_gap", 0.0);

    const std::size_t total = phis.size() + trials;
    std::vector<ConjugateRow> out(total);
    parallel_for(total, workers, [&](std::size_t i) {
        if (i < phis.size()) {
            out[i] = conjugate_row(phis[i]);
        } else {
            auto rng = trial_rng(seed, i - phis.size());
            out[i] = conjugate_row(random_piecewise_linear(rng));
        }
    });

    Outcome o;
    o.table.header = {"item", "phi", "nodes", "biconjugate_gap", "direct_error", "fenchel_young_min"};
    std::vector<double> direct, fy, gap;
    for (std::size_t i = 0; i < total; ++i) {
        const auto& r = out[i];
        o.table.rows.push_back({std::to_string(i), r.phi, std::to_string(r.nodes), fmt(r.gap), fmt(r.direct_error),
                                fmt(r.fenchel_young_min)});
        o.reports.push_back({{"item", i},
                             {"phi", r.phi},
                             {"nodes", r.nodes},
                             {"biconjugate_gap", number(r.gap)},
                             {"direct_error", number(r.direct_error)},
                             {"fenchel_young_min", number(r.fenchel_young_min)}});
        direct.push_back(r.direct_error);
        fy.push_back(r.fenchel_young_min);
        gap.push_back(r.gap);
    }
    o.checks.push_back(max_abs_check("direct_sup", direct, max_direct));
    o.checks.push_back(min_check("fenchel_young", fy, min_fy));
    if (gap_checked) o.checks.push_back(max_abs_check("biconjugate_gap", gap, max_gap));
    o.n_rows = total;
    return o;
}

Outcome run_berezin_suite(const ExperimentConfig& c, int workers) {
    const long N = c.integer_or("grid", "N", 64);
    const double L = c.number_or("grid", "L", 2.0 * std::numbers::pi);
    const auto symbols = c.list("suite", "symbols");
    for (const auto& s : symbols)
        if (s.rfind("file:", 0) != 0) validate_symbol(s);
    const auto phis = resolve_phis(c);
    const std::vector<double> hs = c.numbers("sweep", "values");
    const std::string tau_spec = c.get_or("suite", "tau", "auto");
    const bool tau_auto = tau_spec == "auto";
    const double tau_fixed = tau_auto ? 0.0 : detail::parse_scalar(tau_spec);
    const double min_slack = c.number_or("checks", "min_slack", -1e-8);
    const double min_col = c.number_or("checks", "min_column_slack", -1e-8);
    const double mapping_tol = c.number_or("checks", "spectral_mapping", 1e-8);
    if (symbols.empty() || hs.empty()) throw ConfigError(c.origin() + ": berezin suite needs symbols and h values");
    for (double h : hs) PhaseGrid(static_cast<int>(N), h, L);

    struct Case {
        std::size_t symbol, phi;
        double h, tau;
    };
    std::vector<Case> cases;
    for (std::size_t s = 0; s < symbols.size(); ++s)
        for (std::size_t f = 0; f < phis.size(); ++f)
            for (double h : hs) cases.push_back({s, f, h, tau_auto ? (phis[f].dimension() == 1 ? 0.5 : 1.0) : tau_fixed});

    std::vector<Theorem7Result> out(cases.size());
    parallel_for(cases.size(), workers, [&](std::size_t i) {
        const auto& k = cases[i];
        const PhaseGrid g(static_cast<int>(N), k.h, L);
        const SymbolGrid sigma = resolve_symbol(g, symbols[k.symbol]);
        out[i] = theorem7_check(sigma, phis[k.phi], k.tau, Eigen::MatrixXcd::Identity(N, N));
    });

    Outcome o;
    o.table.header = {"case", "symbol", "phi",  "tau",  "h",        "lhs",   "rhs", "slack", "nu1", "nu2", "trace_T",
                      "hermitian", "spectral_mapping_lhs", "spectral_mapping_error", "min_column_slack"};
    std::vector<double> slack, col_slack, mapping;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& k = cases[i];
        const auto& res = out[i];
        const auto& r = res.report;
        double worst_col = HUGE_VAL;
        for (const auto& col : res.columns) worst_col = std::min(worst_col, col.slack);
        if (res.columns.empty()) worst_col = 0.0;
        const double map_err = res.hermitian ? std::abs(r.lhs - res.spectral_mapping_lhs) : 0.0;
        o.table.rows.push_back({std::to_string(i), '"' + symbols[k.symbol] + '"', phis[k.phi].id(), fmt(k.tau), fmt(k.h),
                                fmt(r.lhs), fmt(r.rhs), fmt(r.slack), fmt(r.nu1), fmt(r.nu2), fmt(r.trace_T),
                                res.hermitian ? "1" : "0", fmt(res.spectral_mapping_lhs), fmt(map_err),
                                fmt(worst_col)});
        json j = detail::to_json(r);
        j["case"] = i;
        j["hermitian"] = res.hermitian;
        j["spectral_mapping_lhs"] = number(res.spectral_mapping_lhs);
        j["min_column_slack"] = number(worst_col);
        j["columns"] = res.columns.size();
        o.reports.push_back(std::move(j));
        slack.push_back(r.slack);
        col_slack.push_back(worst_col);
        mapping.push_back(map_err);
    }
    o.checks.push_back(min_check("slack", slack, min_slack));
    o.checks.push_back(min_check("column_slack", col_slack, min_col));
    o.checks.push_back(max_abs_check("spectral_mapping", mapping, mapping_tol));
    o.n_rows = cases.size();
    return o;
}

// Column checks configured in [checks] for sweep tables:
//   min = col:bound;..   max_abs = col:bound;..   decreasing = col;..   bounded = col;..   bounded_factor = 2
struct SweepChecks {
    std::vector<std::pair<std::string, double>> min, max_abs;
    std::vector<std::string> decreasing, bounded;
    double factor = 2.0;
};

SweepChecks parse_sweep_checks(const ExperimentConfig& c) {
    SweepChecks s;
    auto pairs = [&](const std::string& key) {
        std::vector<std::pair<std::string, double>> out;
        if (!c.has("checks", key)) return out;
        for (const auto& item : c.list("checks", key)) {
            const auto colon = item.rfind(':');
            if (colon == std::string::npos) throw ConfigError(c.origin() + ": [checks] " + key + " needs column:bound");
            out.emplace_back(std::string(detail::trim(item.substr(0, colon))), detail::parse_scalar(item.substr(colon + 1)));
        }
        return out;
    };
    s.min = pairs("min");
    s.max_abs = pairs("max_abs");
    if (c.has("checks", "decreasing")) s.decreasing = c.list("checks", "decreasing");
    if (c.has("checks", "bounded")) s.bounded = c.list("checks", "bounded");
    s.factor = c.number_or("checks", "bounded_factor", 2.0);
    return s;
}

Outcome sweep_outcome(const SweepTable& t, const SweepChecks& sc) {
    std::vector<std::string> columns = {"sweep_value", "lhs", "rhs", "slack", "nu1", "nu2", "trace_T"};
    if (!t.rows.empty())
        for (const auto& [k, v] : t.rows.front().aux) columns.push_back(k);
    auto require = [&](const std::string& col) {
        if (std::find(columns.begin(), columns.end(), col) == columns.end())
            throw ConfigError("[checks] refers to unknown column '" + col + "'");
    };

    Outcome o;
    std::istringstream lines(t.to_csv());
    std::string line;
    bool first = true;
    while (std::getline(lines, line)) {
        auto cells = detail::split(line, ',');
        if (first) {
            o.table.header = cells;
            first = false;
        } else {
            o.table.rows.push_back(std::move(cells));
        }
    }
    for (const auto& r : t.rows) {
        json j = {{"sweep_value", number(r.sweep_value)}, {"lhs", number(r.lhs)}, {"rhs", number(r.rhs)},
                  {"slack", number(r.slack)},             {"nu1", number(r.nu1)}, {"nu2", number(r.nu2)},
                  {"trace_T", number(r.trace_T)}};
        for (const auto& [k, v] : r.aux) j[k] = number(v);
        o.reports.push_back(std::move(j));
    }
    o.extra = {{"fit_column", t.fit_column},
               {"fitted_exponent", number(t.fitted_exponent)},
               {"fit_residual", number(t.fit_residual)}};

    for (const auto& [col, bound] : sc.min) {
        require(col);
        o.checks.push_back(min_check("min:" + col, t.column(col), bound));
    }
    for (const auto& [col, bound] : sc.max_abs) {
        require(col);
        o.checks.push_back(max_abs_check("max_abs:" + col, t.column(col), bound));
    }
    for (const auto& col : sc.decreasing) {
        require(col);
        const auto v = t.column(col);
        Check ck{"decreasing:" + col, strictly_decreasing(v), "values " + limits_text(v), -1};
        for (std::size_t i = 1; i < v.size() && !ck.pass; ++i)
            if (!(v[i] < v[i - 1])) {
                ck.first_bad = static_cast<long>(i);
                break;
            }
        o.checks.push_back(ck);
    }
    for (const auto& col : sc.bounded) {
        require(col);
        const auto v = t.column(col);
        Check ck{"bounded:" + col, bounded_by_first(v, sc.factor),
                 "|values| <= " + fmt(sc.factor) + " |first|: " + limits_text(v), -1};
        for (std::size_t i = 0; i < v.size() && !ck.pass; ++i)
            if (!(std::abs(v[i]) <= sc.factor * std::abs(v.front()))) {
                ck.first_bad = static_cast<long>(i);
                break;
            }
        o.checks.push_back(ck);
    }
    o.n_rows = t.rows.size();
    return o;
}

Outcome run_sweep(const ExperimentConfig& c, int workers) {
    const std::vector<double> values = c.numbers("sweep", "values");
    const SweepChecks sc = parse_sweep_checks(c);
    const ConvexFunction phi = resolve_phi(c.get("phi", "id"));
    const std::string& kind = c.kind();
    if (kind == "example10") {
        Example10Options opt;
        opt.N = static_cast<int>(c.integer_or("grid", "N", opt.N));
        opt.L = c.number_or("grid", "L", opt.L);
        opt.z_grid = static_cast<int>(c.integer_or("example10", "z_grid", opt.z_grid));
        opt.workers = workers;
        const RegionSpec region = RegionSpec::parse(c.get("region", "spec"));
        for (double h : values) PhaseGrid(opt.N, h, opt.L);
        return sweep_outcome(example10_experiment(region, phi, values, opt), sc);
    }
    if (kind == "example8") {
        Example8Options opt;
        opt.K = static_cast<int>(c.integer_or("grid", "K", opt.K));
        opt.workers = workers;
        const std::string b = c.get("symbol", "id");
        validate_symbol(b);
        return sweep_outcome(example8_experiment(b, phi, values, opt), sc);
    }
    Example11Options opt;
    opt.N = static_cast<int>(c.integer_or("grid", "N", opt.N));
    opt.L = c.number_or("grid", "L", opt.L);
    opt.delta = c.number_or("example11", "delta", opt.delta);
    opt.workers = workers;
    const std::string s = c.get("symbol", "id");
    validate_symbol(s);
    const double z = c.number_or("example11", "z", 0.0);
    for (double h : values) PhaseGrid(opt.N, h, opt.L);
    return sweep_outcome(example11_residual(s, phi, z, values, opt), sc);
}

bool in_family(const std::string& kind, ExperimentFamily f) {
    switch (f) {
        case ExperimentFamily::Any: return true;
        case ExperimentFamily::Suite: return kind == "berezin" || kind == "projected";
        case ExperimentFamily::Sweep: return kind == "example8" || kind == "example10" || kind == "example11";
    }
    return false;
}

}  // namespace

int run_experiment(const std::string& config_path, const RunOptions& opt, std::ostream& out, std::ostream& err,
                   ExperimentFamily family) {
    try {
        const ExperimentConfig c = ExperimentConfig::load(config_path);
        if (!in_family(c.kind(), family))
            throw ConfigError(c.origin() + ": experiment kind '" + c.kind() + "' is not accepted by this subcommand");
        const std::string name = c.name();
        const long seed_cfg = c.integer_or("experiment", "seed", 0);
        const std::uint64_t seed = opt.seed ? *opt.seed : static_cast<std::uint64_t>(seed_cfg);
        const std::string dir = opt.out_dir ? *opt.out_dir : c.get_or("output", "dir", "out");
        const int workers = std::max(1, opt.workers);

        Outcome o;
        const std::string& kind = c.kind();
        if (kind == "projected") o = run_projected(c, seed, workers);
        else if (kind == "lemma3") o = run_lemma3(c, seed, workers);
        else if (kind == "example4") o = run_example4(c, seed, workers);
        else if (kind == "garding") o = run_garding(c, seed, workers);
        else if (kind == "conjugate") o = run_conjugate(c, seed, workers);
        else if (kind == "berezin") o = run_berezin_suite(c, workers);
        else o = run_sweep(c, workers);

        bool pass = true;
        json checks = json::array();
        for (const auto& ck : o.checks) {
            pass = pass && ck.pass;
            checks.push_back({{"name", ck.name}, {"pass", ck.pass}, {"detail", ck.detail}, {"first_failing_report", ck.first_bad}});
        }
        json report = {{"kind", kind}, {"name", name}, {"seed", seed}, {"rows", o.n_rows}, {"pass", pass}, {"checks", checks}};
        for (const auto& [k, v] : o.extra.items()) report[k] = v;
        report["reports"] = std::move(o.reports);

        const std::string csv_path = (std::filesystem::path(dir) / (name + ".csv")).string();
        const std::string json_path = (std::filesystem::path(dir) / (name + ".json")).string();
        detail::write_file(csv_path, o.table.csv());
        detail::write_file(json_path, report.dump(1) + "\n");

        out << kind << " '" << name << "' seed " << seed << ": " << o.n_rows << " rows\n";
        for (const auto& ck : o.checks) out << "  " << (ck.pass ? "PASS " : "FAIL ") << ck.name << ": " << ck.detail << "\n";
        out << "wrote " << csv_path << "\n";
        out << "wrote " << json_path << "\n";
        if (!pass) {
            for (std::size_t i = 0; i < o.checks.size(); ++i)
                if (!o.checks[i].pass) {
                    out << "first failing report: " << json_path;
                    if (o.checks[i].first_bad >= 0) out << "#/reports/" << o.checks[i].first_bad;
                    else out << "#/checks/" << i;
                    out << "\n";
                    break;
                }
        }
        out << (pass ? "PASS" : "FAIL") << "\n";
        return pass ? kExitPass : kExitCheckFailed;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const PreconditionError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ShapeError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    }
}

}  // namespace berezin
