#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace berezin {

/// `key = value` lines grouped under `[section]` headers (`;` and `#` start comments).
/// Lookups of absent keys or malformed values raise ConfigError.
class ExperimentConfig {
public:
    static ExperimentConfig load(const std::string& path);
    static ExperimentConfig parse(std::istream& in, const std::string& origin = "<config>");

    const std::string& origin() const { return origin_; }
    /// [experiment] kind, validated against the known kinds.
    const std::string& kind() const { return kind_; }
    /// [experiment] name, defaulting to the kind.
    std::string name() const;

    bool has_section(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key, const std::string& fallback) const;
    double number(const std::string& section, const std::string& key) const;
    double number_or(const std::string& section, const std::string& key, double fallback) const;
    long integer_or(const std::string& section, const std::string& key, long fallback) const;
    /// Comma-separated numbers (a "pi" suffix is accepted).
    std::vector<double> numbers(const std::string& section, const std::string& key) const;
    /// `;`-separated items, empty items dropped.
    std::vector<std::string> list(const std::string& section, const std::string& key) const;

private:
    std::string origin_;
    std::string kind_;
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

/// Experiment kinds accepted in [experiment] kind.
const std::vector<std::string>& experiment_kinds();

enum class ExperimentFamily {
    Any,
    Suite,  // berezin, projected
    Sweep,  // example8, example10, example11
};

struct RunOptions {
    int workers = 1;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

/// Exit statuses of run_experiment and run_selftest.
enum ExitCode : int { kExitPass = 0, kExitCheckFailed = 1, kExitConfig = 2, kExitNumeric = 3 };

/// Runs the experiment described by the config file, writes <out>/<name>.csv and <out>/<name>.json,
/// and prints a summary to `out`. Nothing is written unless the experiment ran to completion.
int run_experiment(const std::string& config_path, const RunOptions& opt, std::ostream& out, std::ostream& err,
                   ExperimentFamily family = ExperimentFamily::Any);

/// Built-in checks of the closed-form examples; one PASS/FAIL line per check.
int run_selftest(std::ostream& out);

/// Worker count from the BEREZIN_WORKERS environment variable, or 1.
int default_workers();

/// Generator for trial `index` of a suite seeded with `seed`; independent of the order trials run in.
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t index);

}  // namespace berezin
