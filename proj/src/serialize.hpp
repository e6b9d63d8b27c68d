#pragma once

#include <string>

#include "json.hpp"

#include "berezin/inequality.hpp"
#include "berezin/jensen.hpp"
#include "berezin/spectral.hpp"

namespace berezin::detail {

using json = nlohmann::ordered_json;

/// "%.17g"; non-finite values print as inf, -inf, nan.
std::string csv_number(double v);

json to_json(const AffinePair& a);
json to_json(const Provenance& p);
json to_json(const InequalityReport& r);
json to_json(const JensenReport& r);
json to_json(const SpectrumReport& s);
json to_json(const RangeHull& h);
json to_json(const GardingResult& g);
json to_json(const SweepTable& t);

/// Non-finite doubles become the strings "inf", "-inf", "nan" so that no information is lost.
json number(double v);

/// Writes `content` to `path`, creating parent directories. ConfigError when the file cannot be written.
void write_file(const std::string& path, const std::string& content);

}  // namespace berezin::detail
