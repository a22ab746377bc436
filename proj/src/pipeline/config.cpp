#include "dtrkit/config.hpp"

#include "dtrkit/calendar.hpp"
#include "dtrkit/csv.hpp"
#include "dtrkit/error.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <type_traits>

namespace dtrkit {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  try {
    if constexpr (std::is_floating_point_v<T>) {
      return csv::parse_double(value);
    } else {
      const auto v = csv::parse_int(value);
      if (v < 0 && std::is_unsigned_v<T>) throw DataError("negative");
      return static_cast<T>(v);
    }
  } catch (const DataError&) {
    throw UsageError("config: bad value for " + key + ": '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw UsageError("config: bad boolean for " + key + ": '" + value + "'");
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "grids") grids_path = value;
  else if (key == "values") values_path = value;
  else if (key == "enso") enso_path = value;
  else if (key == "start") start = value;
  else if (key == "end") end = value;
  else if (key == "december_with_next_year") december_with_next_year = parse_bool(key, value);
  else if (key == "order") order = value;
  else if (key == "trim_k") trim_k = parse_number<Eigen::Index>(key, value);
  else if (key == "max_lag") max_lag = parse_number<Eigen::Index>(key, value);
  else if (key == "period") period = parse_number<int>(key, value);
  else if (key == "level") level = parse_number<double>(key, value);
  else if (key == "null_reps") null_reps = parse_number<std::size_t>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "permutation") {
    try {
      permutation = parse_permutation_scheme(value);
    } catch (const std::exception&) {
      throw UsageError("config: unknown permutation scheme '" + value + "'");
    }
  } else if (key == "weights") {
    if (value == "lag1-adjacency") weight_kind = WeightKind::Lag1Adjacency;
    else if (value == "exp-decay") weight_kind = WeightKind::ExpDecay;
    else throw UsageError("config: unknown weight kind '" + value + "'");
  } else if (key == "neighborhood") {
    if (value == "rook") neighborhood = Neighborhood::Rook;
    else if (value == "queen") neighborhood = Neighborhood::Queen;
    else throw UsageError("config: unknown neighborhood '" + value + "'");
  } else if (key == "weight_scale") weight_scale = parse_number<double>(key, value);
  else if (key == "estimator") {
    if (value == "unbiased") estimator = BergsmaEstimator::Unbiased;
    else if (value == "plugin") estimator = BergsmaEstimator::Plugin;
    else throw UsageError("config: unknown estimator '" + value + "'");
  } else if (key == "out") out = value;
  else if (key == "threads") threads = parse_number<std::size_t>(key, value);
  else if (key == "log_level") log_level = value;
  else throw UsageError("config: unknown key '" + key + "'");
}

std::string RunConfig::to_text() const {
  std::map<std::string, std::string> kv{
      {"grids", grids_path},
      {"values", values_path},
      {"enso", enso_path},
      {"start", start},
      {"end", end},
      {"december_with_next_year", december_with_next_year ? "true" : "false"},
      {"order", order},
      {"trim_k", std::to_string(trim_k)},
      {"max_lag", std::to_string(max_lag)},
      {"period", std::to_string(period)},
      {"level", csv::format_double(level)},
      {"null_reps", std::to_string(null_reps)},
      {"seed", std::to_string(seed)},
      {"permutation", permutation == PermutationScheme::WithinColumn      ? "within-column"
                      : permutation == PermutationScheme::IndependentRows ? "independent-rows"
                                                                          : "joint-rows"},
      {"weights", std::string(to_string(weight_kind))},
      {"neighborhood", neighborhood == Neighborhood::Rook ? "rook" : "queen"},
      {"weight_scale", csv::format_double(weight_scale)},
      {"export_panels", export_panels ? "true" : "false"},
      {"estimator", estimator == BergsmaEstimator::Unbiased ? "unbiased" : "plugin"},
  };
  // Output location, threads and verbosity do not change results and are
  // left out so that the listing can serve as a digest input.
  std::ostringstream os;
  for (const auto& [k, v] : kv) os << k << " = " << v << '\n';
  return os.str();
}

void RunConfig::validate(bool require_inputs) const {
  auto fail = [](const std::string& msg) { throw UsageError("config: " + msg); };
  try {
    if (parse_iso_date(start) > parse_iso_date(end)) fail("start after end");
  } catch (const DataError& e) {
    fail(e.what());
  }
  if (trim_k < 1) fail("trim_k must be at least 1");
  if (max_lag < 0) fail("max_lag must be non-negative");
  if (period < 2) fail("period must be at least 2");
  if (!(level > 0.0 && level < 1.0)) fail("level must lie in (0, 1)");
  if (null_reps < 1) fail("null_reps must be at least 1");
  if (!(weight_scale > 0.0)) fail("weight_scale must be positive");
  if (out.empty()) fail("out must not be empty");
  static const char* levels[] = {"trace", "debug", "info", "warn", "error", "off"};
  if (std::find(std::begin(levels), std::end(levels), log_level) == std::end(levels))
    fail("unknown log_level '" + log_level + "'");
  if (require_inputs) {
    if (grids_path.empty() || values_path.empty()) fail("grids and values are required");
    for (const auto& p : {grids_path, values_path})
      if (!std::filesystem::exists(p)) throw DataError("input file not found: " + p);
    if (!enso_path.empty() && !std::filesystem::exists(enso_path))
      throw DataError("input file not found: " + enso_path);
  }
}

std::map<std::string, std::string> read_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = csv::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key = value");
    kv[std::string(csv::trim(body.substr(0, eq)))] = std::string(csv::trim(body.substr(eq + 1)));
  }
  return kv;
}

RunConfig load_config(const std::string& path, const std::map<std::string, std::string>& overrides) {
  RunConfig cfg;
  if (!path.empty()) {
    const auto dir = std::filesystem::path(path).parent_path();
    for (const auto& [k, v] : read_settings(path)) {
      // Input paths in a config file are relative to the file.
      if ((k == "grids" || k == "values" || k == "enso") && !v.empty() && std::filesystem::path(v).is_relative())
        cfg.set(k, (dir / v).lexically_normal().string());
      else
        cfg.set(k, v);
    }
  }
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  return cfg;
}

}  // namespace dtrkit
