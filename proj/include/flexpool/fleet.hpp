#pragma once

// PEV fleet scenarios: uniform parameter sampling with a counter-based PRNG,
// trip windows as zero power bounds, and day-ahead price series.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "flexpool/costs.hpp"
#include "flexpool/errors.hpp"
#include "flexpool/parallel.hpp"
#include "flexpool/polytope.hpp"
#include "flexpool/zonotope.hpp"

namespace flexpool {

/// Philox4x32-10 (Salmon et al., Random123). Stateless: block(counter, key).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;
  static constexpr const char* kName = "philox4x32-10";

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }
};

/// One independent stream per (seed, stream id): counter = (block, 0, id_lo, id_hi).
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        id_lo_(static_cast<std::uint32_t>(stream)),
        id_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) {
      buf_ = Philox4x32::block({block_++, 0u, id_lo_, id_hi_}, key_);
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  /// 53-bit uniform in [0, 1).
  double uniform01() {
    const std::uint64_t hi = next_u32() >> 5, lo = next_u32() >> 6;
    return static_cast<double>(hi * 67108864u + lo) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo == hi ? lo : lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [lo, hi] by rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1u;
    const std::uint64_t limit = (std::uint64_t{1} << 32) - ((std::uint64_t{1} << 32) % span);
    for (;;) {
      const std::uint64_t x = next_u32();
      if (x < limit) return lo + static_cast<std::int64_t>(x % span);
    }
  }

 private:
  Philox4x32::Key key_;
  std::uint32_t id_lo_, id_hi_;
  std::uint32_t block_ = 0;
  Philox4x32::Counter buf_{};
  int pos_ = 4;
};

struct Trip {
  Index start = 0;  // first step, 0-based
  Index end = 0;    // one past the last step
};

struct PevSpec {
  double capacity = 0.0;  // kWh
  double p_min = 0.0, p_max = 0.0;  // kW
  double soc0 = 0.0;
  std::vector<Trip> trips;

  void validate(Index N) const {
    if (!(capacity >= 0.0) || !std::isfinite(capacity)) throw ConfigError("PevSpec: capacity must be finite and >= 0");
    if (!(p_min <= p_max) || !std::isfinite(p_min) || !std::isfinite(p_max))
      throw ConfigError("PevSpec: need finite p_min <= p_max");
    if (!(soc0 >= 0.0 && soc0 <= 1.0)) throw ConfigError("PevSpec: soc0 must lie in [0, 1]");
    Index last = 0;
    for (const auto& t : trips) {
      if (t.start < last || t.end <= t.start || t.end > N)
        throw ConfigError("PevSpec: trip windows must be ordered, non-empty, non-overlapping and inside the horizon");
      last = t.end;
    }
  }
};

/// Uniform sampling ranges per PEV; trips are off unless max_trips > 0.
struct PevRanges {
  double capacity_lo = 20.0, capacity_hi = 40.0;
  double soc_lo = 0.2, soc_hi = 0.8;
  double p_min = -3.0, p_max = 3.0;
  int max_trips = 0;
  Index max_trip_steps = 3;

  void validate() const {
    if (!(capacity_lo <= capacity_hi) || capacity_lo < 0.0) throw ConfigError("PevRanges: bad capacity range");
    if (!(soc_lo <= soc_hi) || soc_lo < 0.0 || soc_hi > 1.0) throw ConfigError("PevRanges: bad soc range");
    if (!(p_min <= p_max)) throw ConfigError("PevRanges: p_min > p_max");
    if (max_trips < 0 || max_trip_steps < 1) throw ConfigError("PevRanges: bad trip settings");
  }
};

struct FleetScenario {
  Index N = 12;
  double t_s = 2.0;
  std::uint64_t seed = 0;
  std::string prng = Philox4x32::kName;
  std::vector<PevSpec> specs;
};

namespace detail {

// Trips: up to max_trips windows, each of 1..max_trip_steps steps, placed left to
// right in the remaining horizon.
inline std::vector<Trip> sample_trips(PhiloxStream& rng, const PevRanges& r, Index N) {
  std::vector<Trip> trips;
  const auto count = rng.uniform_int(0, r.max_trips);
  Index from = 0;
  for (std::int64_t t = 0; t < count && from < N; ++t) {
    const Index len = static_cast<Index>(rng.uniform_int(1, std::min<Index>(r.max_trip_steps, N - from)));
    const Index start = static_cast<Index>(rng.uniform_int(from, N - len));
    trips.push_back({start, start + len});
    from = start + len;
  }
  return trips;
}

}  // namespace detail

/// System j draws from its own stream (seed, j), so results do not depend on
/// thread count or generation order.
inline FleetScenario sample_fleet(std::size_t count, const PevRanges& ranges, Index N, double t_s, std::uint64_t seed,
                                  unsigned threads = 1) {
  if (count < 1) throw ConfigError("sample_fleet: count must be >= 1");
  if (N < 1 || !(t_s > 0.0)) throw ConfigError("sample_fleet: need N >= 1 and t_s > 0");
  ranges.validate();
  FleetScenario sc;
  sc.N = N;
  sc.t_s = t_s;
  sc.seed = seed;
  sc.specs.resize(count);
  parallel_for(static_cast<std::ptrdiff_t>(count), threads, [&](std::ptrdiff_t j) {
    PhiloxStream rng(seed, static_cast<std::uint64_t>(j));
    PevSpec s;
    s.capacity = rng.uniform(ranges.capacity_lo, ranges.capacity_hi);
    s.soc0 = rng.uniform(ranges.soc_lo, ranges.soc_hi);
    s.p_min = ranges.p_min;
    s.p_max = ranges.p_max;
    if (ranges.max_trips > 0) s.trips = detail::sample_trips(rng, ranges, N);
    sc.specs[static_cast<std::size_t>(j)] = std::move(s);
  });
  return sc;
}

/// Power box with zero bounds on trip steps; energy in [0, capacity], e0 = soc0 capacity.
inline PeParams apply_trips(const PevSpec& spec, Index N, double t_s) {
  spec.validate(N);
  PeParams pe;
  pe.N = N;
  pe.t_s = t_s;
  pe.p_lo = VectorXd::Constant(N, spec.p_min);
  pe.p_hi = VectorXd::Constant(N, spec.p_max);
  for (const auto& t : spec.trips) {
    pe.p_lo.segment(t.start, t.end - t.start).setZero();
    pe.p_hi.segment(t.start, t.end - t.start).setZero();
  }
  pe.e_lo = VectorXd::Zero(N);
  pe.e_hi = VectorXd::Constant(N, spec.capacity);
  pe.e0 = spec.soc0 * spec.capacity;
  return pe;
}

inline std::vector<HPolytope> scenario_polytopes(const FleetScenario& sc) {
  std::vector<HPolytope> ps;
  ps.reserve(sc.specs.size());
  for (const auto& s : sc.specs) ps.push_back(build_pe_polytope(apply_trips(s, sc.N, sc.t_s)));
  return ps;
}

struct PriceSeries {
  VectorXd values;  // EUR/kWh per step
  std::string source;
};

/// Parses "step,price_eur_per_kwh" rows. Steps must be 1, 2, ... in order.
inline PriceSeries parse_prices(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) break;
  }
  if (trim(line) != "step,price_eur_per_kwh")
    throw ParseError(source + ": expected header 'step,price_eur_per_kwh'", lineno);
  std::vector<double> vals;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto comma = t.find(',');
    if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos)
      throw ParseError(source + ": expected two comma-separated fields", lineno);
    try {
      std::size_t used = 0;
      const std::string a = trim(t.substr(0, comma)), b = trim(t.substr(comma + 1));
      const long step = std::stol(a, &used);
      if (used != a.size()) throw std::invalid_argument("step");
      const double price = std::stod(b, &used);
      if (used != b.size() || !std::isfinite(price)) throw std::invalid_argument("price");
      if (step != static_cast<long>(vals.size()) + 1) throw ParseError(source + ": steps must run 1, 2, ... in order", lineno);
      vals.push_back(price);
    } catch (const std::logic_error&) {
      throw ParseError(source + ": malformed number", lineno);
    }
  }
  if (vals.empty()) throw ParseError(source + ": no price rows", lineno);
  PriceSeries ps;
  ps.values = Eigen::Map<const VectorXd>(vals.data(), static_cast<Index>(vals.size()));
  ps.source = source;
  return ps;
}

/// The file covers the planning horizon: N rows are used as is, k*N rows are
/// averaged in blocks of k (a finer source resolution).
inline PriceSeries resample_prices(const PriceSeries& raw, Index N) {
  const Index n = raw.values.size();
  if (N < 1 || n < N || n % N != 0)
    throw LengthMismatch("prices: " + std::to_string(n) + " rows cannot be resampled to " + std::to_string(N) + " steps");
  const Index k = n / N;
  PriceSeries out;
  out.source = raw.source;
  out.values.resize(N);
  for (Index i = 0; i < N; ++i) out.values[i] = raw.values.segment(i * k, k).mean();
  return out;
}

inline PriceSeries load_prices(const std::string& path, Index N) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open price file '" + path + "'");
  return resample_prices(parse_prices(in, path), N);
}

/// Linear flexibility costs r_i beta_i with r_i ~ U[lo, hi], stream (seed, j) per system.
inline std::vector<SystemCost> random_linear_costs(const std::vector<Zonotope>& zs, std::uint64_t seed, double lo = -1.0,
                                                   double hi = 1.0) {
  std::vector<SystemCost> out;
  out.reserve(zs.size());
  for (std::size_t j = 0; j < zs.size(); ++j) {
    PhiloxStream rng(seed, j);
    std::vector<PwlComponent> flex;
    for (Index i = 0; i < zs[j].g(); ++i) flex.push_back(PwlComponent::linear(rng.uniform(lo, hi), zs[j].betabar[i]));
    out.push_back(flexibility_only(flex));
  }
  return out;
}

}  // namespace flexpool
