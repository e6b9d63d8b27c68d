#include <filesystem>
#include <fstream>
#include <numbers>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "berezin/convex.hpp"
#include "berezin/error.hpp"
#include "berezin/quantize.hpp"
#include "berezin/runner.hpp"

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Prints to stdout, or writes <out_dir>/<file> when an output directory was given.
void emit(const std::string& content, const std::string& out_dir, const std::string& file) {
    if (out_dir.empty()) {
        std::cout << content;
        return;
    }
    std::filesystem::create_directories(out_dir);
    const auto path = std::filesystem::path(out_dir) / file;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw berezin::ConfigError("cannot write '" + path.string() + "'");
    out << content;
    std::cout << "wrote " << path.string() << "\n";
}

std::string conjugate_csv(const berezin::ConvexFunction& phi) {
    using namespace berezin;
    const ConvexFunction cj = conjugate(phi);
    std::string s;
    auto cell = [](const ExtendedReal& v) { return v.is_infinite() ? std::string("inf") : fmt(v.value()); };
    if (const auto* d = std::get_if<repr::Sampled1D>(&cj.representation())) {
        s = "x,value\n";
        for (std::size_t k = 0; k < d->x.size(); ++k) s += fmt(d->x[k]) + "," + cell(d->f[k]) + "\n";
    } else if (const auto* d2 = std::get_if<repr::Sampled2D>(&cj.representation())) {
        s = "x,y,value\n";
        for (std::size_t i = 0; i < d2->x.size(); ++i)
            for (std::size_t j = 0; j < d2->y.size(); ++j) s += fmt(d2->x[i]) + "," + fmt(d2->y[j]) + "," + cell(d2->at(i, j)) + "\n";
    } else {
        throw PreconditionError("conjugate: expected a sampled function");
    }
    return s;
}

std::string operator_csv(const berezin::OperatorMatrix& Q) {
    std::string s = "j,m,re,im\n";
    for (Eigen::Index j = 0; j < Q.entries.rows(); ++j)
        for (Eigen::Index m = 0; m < Q.entries.cols(); ++m)
            s += std::to_string(j) + "," + std::to_string(m) + "," + fmt(Q.entries(j, m).real()) + "," +
                 fmt(Q.entries(j, m).imag()) + "\n";
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Convex trace inequalities for quantized symbols: suites, sweeps and checks"};
    app.require_subcommand(1);

    int workers = berezin::default_workers();
    std::uint64_t seed = 0;
    std::string out_dir;
    app.add_option("--workers", workers, "Worker threads (default: BEREZIN_WORKERS or 1)")->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", seed, "Seed overriding the config");
    app.add_option("--out-dir", out_dir, "Output directory overriding the config");

    std::string config;
    auto* run = app.add_subcommand("run", "Run any experiment config");
    run->add_option("config", config, "Config file")->required();
    auto* berezin_cmd = app.add_subcommand("berezin", "Run a Berezin-type suite config (berezin, projected)");
    berezin_cmd->add_option("config", config, "Config file")->required();
    auto* sweep = app.add_subcommand("sweep", "Run a sweep config (example8, example10, example11)");
    sweep->add_option("config", config, "Config file")->required();
    auto* selftest = app.add_subcommand("selftest", "Run the built-in closed-form checks");

    std::string fn_path;
    auto* conj = app.add_subcommand("conjugate", "Conjugate of a sampled convex function (x,value or x,y,value CSV)");
    conj->add_option("function", fn_path, "Function CSV")->required();

    std::string symbol_path;
    double tau = 0.5, h = 0.1, L = 2.0 * std::numbers::pi;
    int n = 64;
    auto* quant = app.add_subcommand("quantize", "Matrix of the tau-quantization of a symbol CSV (p,k,re,im)");
    quant->set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
    quant->add_option("symbol", symbol_path, "Symbol CSV, or a preset symbol id")->required();
    quant->add_option("--tau", tau, "0, 0.5 or 1")->required();
    quant->add_option("--h", h, "Semiclassical parameter")->required();
    quant->add_option("--n", n, "Grid size N (even)")->required();
    quant->add_option("--L", L, "Circle length");

    for (auto* sc : {run, berezin_cmd, sweep, selftest, conj, quant}) sc->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : berezin::kExitConfig;
    }

    berezin::RunOptions opt;
    opt.workers = workers;
    if (seed_opt->count() > 0) opt.seed = seed;
    if (!out_dir.empty()) opt.out_dir = out_dir;

    if (*run) return berezin::run_experiment(config, opt, std::cout, std::cerr);
    if (*berezin_cmd) return berezin::run_experiment(config, opt, std::cout, std::cerr, berezin::ExperimentFamily::Suite);
    if (*sweep) return berezin::run_experiment(config, opt, std::cout, std::cerr, berezin::ExperimentFamily::Sweep);
    if (*selftest) return berezin::run_selftest(std::cout);

    try {
        if (*conj) {
            emit(conjugate_csv(berezin::ConvexFunction::load_csv(fn_path)), out_dir, "conjugate.csv");
            return berezin::kExitPass;
        }
        const berezin::PhaseGrid grid(n, h, L);
        const berezin::SymbolGrid sigma = std::filesystem::exists(symbol_path)
                                               ? berezin::load_symbol_csv(symbol_path, grid)
                                               : berezin::symbol_from_id(grid, symbol_path);
        emit(operator_csv(berezin::quantize_tau(sigma, tau)), out_dir, "operator.csv");
        return berezin::kExitPass;
    } catch (const berezin::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return berezin::kExitConfig;
    } catch (const berezin::PreconditionError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return berezin::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return berezin::kExitNumeric;
    }
}
