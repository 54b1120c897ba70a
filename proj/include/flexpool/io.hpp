#pragma once

// File formats: scenario, zonotope and cost JSON, trajectory and vector CSV.
// Doubles are written in shortest round-trip form, so a write/read cycle
// reproduces every value bit for bit. Files are written to a temporary name and
// renamed into place.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "flexpool/costs.hpp"
#include "flexpool/errors.hpp"
#include "flexpool/fleet.hpp"
#include "flexpool/polytope.hpp"
#include "flexpool/zonotope.hpp"

namespace flexpool::io {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_atomic(path, j.dump(2) + "\n"); }

inline json to_json(const VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

inline VectorXd vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + ": expected an array of numbers");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw ConfigError(std::string(what) + ": expected an array of numbers");
    v[static_cast<Index>(k)] = j[k].get<double>();
  }
  return v;
}

template <class T>
T field(const json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string(what) + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(what) + ": field '" + key + "' has the wrong type");
  }
}

inline void check_format(const json& j, const char* format) {
  if (field<std::string>(j, "format", format) != format)
    throw ConfigError(std::string("expected a '") + format + "' file");
  if (field<int>(j, "version", format) != kFormatVersion)
    throw ConfigError(std::string(format) + ": unsupported version");
}

// Scenario

inline json to_json(const FleetScenario& sc) {
  json systems = json::array();
  for (const auto& s : sc.specs) {
    json trips = json::array();
    for (const auto& t : s.trips) trips.push_back({t.start, t.end});
    systems.push_back({{"capacity_kwh", s.capacity},
                       {"p_min_kw", s.p_min},
                       {"p_max_kw", s.p_max},
                       {"soc0", s.soc0},
                       {"trips", trips}});
  }
  return {{"format", "flexpool-scenario"}, {"version", kFormatVersion}, {"prng", sc.prng}, {"seed", sc.seed},
          {"N", sc.N},                     {"t_s_h", sc.t_s},            {"systems", systems}};
}

inline FleetScenario scenario_from_json(const json& j) {
  check_format(j, "flexpool-scenario");
  FleetScenario sc;
  sc.prng = field<std::string>(j, "prng", "scenario");
  sc.seed = field<std::uint64_t>(j, "seed", "scenario");
  sc.N = field<Index>(j, "N", "scenario");
  sc.t_s = field<double>(j, "t_s_h", "scenario");
  if (sc.N < 1 || !(sc.t_s > 0.0)) throw ConfigError("scenario: need N >= 1 and t_s_h > 0");
  const json& systems = j.at("systems");
  if (!systems.is_array() || systems.empty()) throw ConfigError("scenario: 'systems' must be a non-empty array");
  for (const auto& s : systems) {
    PevSpec spec;
    spec.capacity = field<double>(s, "capacity_kwh", "scenario system");
    spec.p_min = field<double>(s, "p_min_kw", "scenario system");
    spec.p_max = field<double>(s, "p_max_kw", "scenario system");
    spec.soc0 = field<double>(s, "soc0", "scenario system");
    if (s.contains("trips"))
      for (const auto& t : s.at("trips")) {
        if (!t.is_array() || t.size() != 2) throw ConfigError("scenario: each trip is [start, end)");
        spec.trips.push_back({t[0].get<Index>(), t[1].get<Index>()});
      }
    spec.validate(sc.N);
    sc.specs.push_back(std::move(spec));
  }
  return sc;
}

// Zonotopes

inline json to_json(const Zonotope& z) {
  return {{"family", to_string(z.family)}, {"N", z.N()}, {"c", to_json(z.c)}, {"betabar", to_json(z.betabar)}};
}

inline Zonotope zonotope_from_json(const json& j) {
  const Family fam = family_from_string(field<std::string>(j, "family", "zonotope"));
  const Index N = field<Index>(j, "N", "zonotope");
  const VectorXd c = vector_from_json(j.at("c"), "zonotope c");
  if (c.size() != N) throw ConfigError("zonotope: c length does not match N");
  try {
    return Zonotope(fam, c, vector_from_json(j.at("betabar"), "zonotope betabar"));
  } catch (const DimensionMismatch& e) {
    throw ConfigError(std::string("zonotope: ") + e.what());
  }
}

inline json to_json(const std::vector<Zonotope>& zs) {
  json arr = json::array();
  for (const auto& z : zs) arr.push_back(to_json(z));
  return {{"format", "flexpool-zonotopes"}, {"version", kFormatVersion}, {"zonotopes", arr}};
}

/// Accepts a zonotope set file or a single bare zonotope object.
inline std::vector<Zonotope> zonotopes_from_json(const json& j) {
  std::vector<Zonotope> zs;
  if (j.is_object() && j.contains("family")) {
    zs.push_back(zonotope_from_json(j));
    return zs;
  }
  check_format(j, "flexpool-zonotopes");
  for (const auto& z : j.at("zonotopes")) zs.push_back(zonotope_from_json(z));
  if (zs.empty()) throw ConfigError("zonotopes: empty set");
  return zs;
}

// Polytopes

inline json to_json(const HPolytope& P) {
  json A = json::array();
  for (Index r = 0; r < P.rows(); ++r) A.push_back(to_json(VectorXd(P.A.row(r).transpose())));
  return {{"N", P.N}, {"A", A}, {"b", to_json(P.b)}};
}

// Costs: per system, flexibility components over beta and contract prices v^(j).

struct CostSpec {
  std::vector<PwlComponent> components;
  VectorXd prices;  // empty: no energy term
};

inline json to_json(const CostSpec& c) {
  json comps = json::array();
  for (const auto& p : c.components)
    comps.push_back({{"lengths", p.lengths}, {"slopes", p.slopes}, {"left_value", p.left_value}});
  return {{"components", comps}, {"prices", to_json(c.prices)}};
}

inline json to_json(const std::vector<CostSpec>& cs) {
  json arr = json::array();
  for (const auto& c : cs) arr.push_back(to_json(c));
  return {{"format", "flexpool-costs"}, {"version", kFormatVersion}, {"systems", arr}};
}

inline std::vector<CostSpec> costs_from_json(const json& j) {
  check_format(j, "flexpool-costs");
  std::vector<CostSpec> out;
  for (const auto& s : j.at("systems")) {
    CostSpec c;
    for (const auto& p : s.at("components")) {
      PwlComponent comp;
      comp.lengths = field<std::vector<double>>(p, "lengths", "cost component");
      comp.slopes = field<std::vector<double>>(p, "slopes", "cost component");
      comp.left_value = p.contains("left_value") ? field<double>(p, "left_value", "cost component") : 0.0;
      double total = 0.0;
      for (double l : comp.lengths) total += l;
      comp.betabar = 0.5 * total;
      c.components.push_back(std::move(comp));
    }
    if (s.contains("prices")) c.prices = vector_from_json(s.at("prices"), "cost prices");
    out.push_back(std::move(c));
  }
  return out;
}

/// Full per-system cost on Z with step length t_s.
inline SystemCost system_cost(const CostSpec& c, const Zonotope& Z, double t_s) {
  try {
    for (const auto& comp : c.components) comp.validate();
    if (c.prices.size() == 0) {
      if (static_cast<Index>(c.components.size()) != Z.g())
        throw DimensionMismatch("cost: one component per generator required");
      for (Index i = 0; i < Z.g(); ++i)
        if (std::abs(c.components[static_cast<std::size_t>(i)].betabar - Z.betabar[i]) >
            1e-9 * std::max(1.0, Z.betabar[i]))
          throw DimensionMismatch("cost: component domain does not match the zonotope betabar");
      return flexibility_only(c.components);
    }
    return build_system_cost(c.components, c.prices, Z, t_s);
  } catch (const DimensionMismatch& e) {
    throw ConfigError(e.what());
  } catch (const NonConvexInput& e) {
    throw ConfigError(e.what());
  }
}

inline CostSpec cost_spec(const SystemCost& c) { return {c.components, VectorXd()}; }

// CSV

inline std::string fmt(double x) {
  std::ostringstream ss;
  ss << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
  return ss.str();
}

/// Rows = systems, columns = time steps.
inline std::string trajectories_csv(const MatrixXd& P) {
  std::ostringstream ss;
  ss << "system";
  for (Index k = 0; k < P.rows(); ++k) ss << ",p" << (k + 1);
  ss << "\n";
  for (Index j = 0; j < P.cols(); ++j) {
    ss << j;
    for (Index k = 0; k < P.rows(); ++k) ss << "," << fmt(P(k, j));
    ss << "\n";
  }
  return ss.str();
}

/// "step,value" rows with steps 1..N.
inline VectorXd read_vector_csv(const std::filesystem::path& path, const std::string& header) {
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> vals;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!seen_header) {
      if (line != header) throw ParseError(path.string() + ": expected header '" + header + "'", lineno);
      seen_header = true;
      continue;
    }
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("fields");
      if (std::stol(line.substr(0, comma)) != static_cast<long>(vals.size()) + 1)
        throw ParseError(path.string() + ": steps must run 1, 2, ... in order", lineno);
      std::size_t used = 0;
      const std::string rest = line.substr(comma + 1);
      const double v = std::stod(rest, &used);
      if (used != rest.size() || !std::isfinite(v)) throw std::invalid_argument("value");
      vals.push_back(v);
    } catch (const std::logic_error&) {
      throw ParseError(path.string() + ": malformed row", lineno);
    }
  }
  if (vals.empty()) throw ParseError(path.string() + ": no data rows", lineno);
  return Eigen::Map<const VectorXd>(vals.data(), static_cast<Index>(vals.size()));
}

inline std::string vector_csv(const VectorXd& v, const std::string& header) {
  std::ostringstream ss;
  ss << header << "\n";
  for (Index k = 0; k < v.size(); ++k) ss << (k + 1) << "," << fmt(v[k]) << "\n";
  return ss.str();
}

}  // namespace flexpool::io
