#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "berezin/error.hpp"
#include "berezin/runner.hpp"
#include "text.hpp"

namespace berezin {

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds = {"berezin", "projected", "lemma3",    "example4", "example8",
                                                   "example10", "example11", "garding", "conjugate"};
    return kinds;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    return parse(in, path);
}

ExperimentConfig ExperimentConfig::parse(std::istream& in, const std::string& origin) {
    namespace pt = boost::property_tree;
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    pt::ptree tree;
    try {
        std::istringstream body(text);
        pt::ini_parser::read_ini(body, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }

    ExperimentConfig c;
    c.origin_ = origin;
    // The ptree drops sections without keys; headers are collected from the text so that they still count.
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
        const auto t = detail::trim(line);
        if (t.size() >= 2 && t.front() == '[' && t.back() == ']')
            c.sections_[std::string(detail::trim(t.substr(1, t.size() - 2)))];
    }
    for (const auto& [section, body] : tree) {
        if (!body.data().empty() || !c.has_section(section))
            throw ConfigError(origin + ": key '" + section + "' outside any [section]");
        auto& dst = c.sections_[section];
        for (const auto& [key, value] : body) dst[key] = std::string(detail::trim(value.data()));
    }
    if (!c.has_section("experiment")) throw ConfigError(origin + ": missing [experiment] section");
    if (!c.has_section("grid")) throw ConfigError(origin + ": missing [grid] section");
    c.kind_ = c.get("experiment", "kind");
    const auto& kinds = experiment_kinds();
    if (std::find(kinds.begin(), kinds.end(), c.kind_) == kinds.end())
        throw ConfigError(origin + ": unknown experiment kind '" + c.kind_ + "'");
    return c;
}

std::string ExperimentConfig::name() const {
    const std::string n = get_or("experiment", "name", kind_);
    if (n.empty() || n.find_first_of("/\\") != std::string::npos)
        throw ConfigError(origin_ + ": [experiment] name must be a plain file stem");
    return n;
}

bool ExperimentConfig::has_section(const std::string& section) const { return sections_.count(section) > 0; }

bool ExperimentConfig::has(const std::string& section, const std::string& key) const {
    const auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) > 0;
}

std::string ExperimentConfig::get(const std::string& section, const std::string& key) const {
    if (!has(section, key)) throw ConfigError(origin_ + ": missing [" + section + "] " + key);
    return sections_.at(section).at(key);
}

std::string ExperimentConfig::get_or(const std::string& section, const std::string& key,
                                     const std::string& fallback) const {
    return has(section, key) ? sections_.at(section).at(key) : fallback;
}

double ExperimentConfig::number(const std::string& section, const std::string& key) const {
    try {
        return detail::parse_scalar(get(section, key));
    } catch (const ConfigError& e) {
        throw ConfigError(origin_ + ": [" + section + "] " + key + ": " + e.what());
    }
}

double ExperimentConfig::number_or(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? number(section, key) : fallback;
}

long ExperimentConfig::integer_or(const std::string& section, const std::string& key, long fallback) const {
    if (!has(section, key)) return fallback;
    try {
        return detail::parse_int(get(section, key));
    } catch (const ConfigError& e) {
        throw ConfigError(origin_ + ": [" + section + "] " + key + ": " + e.what());
    }
}

std::vector<double> ExperimentConfig::numbers(const std::string& section, const std::string& key) const {
    try {
        return detail::parse_scalars(get(section, key));
    } catch (const ConfigError& e) {
        throw ConfigError(origin_ + ": [" + section + "] " + key + ": " + e.what());
    }
}

std::vector<std::string> ExperimentConfig::list(const std::string& section, const std::string& key) const {
    std::vector<std::string> out;
    for (auto& item : detail::split(get(section, key), ';'))
        if (!item.empty()) out.push_back(item);
    return out;
}

int default_workers() {
    const char* env = std::getenv("BEREZIN_WORKERS");
    if (env == nullptr || *env == '\0') return 1;
    try {
        const long w = detail::parse_int(env);
        return w >= 1 ? static_cast<int>(w) : 1;
    } catch (const ConfigError&) {
        return 1;
    }
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 finalizer over (seed, index) so neighbouring trials get unrelated streams.
    auto mix = [](std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    };
    return std::mt19937_64(mix(mix(seed) ^ index));
}

}  // namespace berezin
