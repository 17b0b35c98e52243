#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tauclock/error.hpp"
#include "tauclock/interferometer.hpp"
#include "tauclock/io.hpp"
#include "tauclock/larmor_clock.hpp"
#include "tauclock/lattice_oracle.hpp"
#include "tauclock/scattering.hpp"
#include "tauclock/tau_amplitude.hpp"
#include "tauclock/wavepacket.hpp"

namespace tauclock {

using json = nlohmann::json;

enum class ScenarioKind { taudist, clock, interferometer, oracle };

inline std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::taudist: return "taudist";
    case ScenarioKind::clock: return "clock";
    case ScenarioKind::interferometer: return "interferometer";
    case ScenarioKind::oracle: return "oracle";
  }
  return "unknown";
}

inline std::optional<ScenarioKind> parse_kind(const std::string& s) {
  if (s == "taudist") return ScenarioKind::taudist;
  if (s == "clock") return ScenarioKind::clock;
  if (s == "interferometer") return ScenarioKind::interferometer;
  if (s == "oracle") return ScenarioKind::oracle;
  return std::nullopt;
}

struct PacketConfig {
  double p0 = 0.0;
  double dp = 0.0;
  double x_c = 0.0;
  double mu = 1.0;
  std::size_t n_points = 512;
  double span = 6.0;

  WavePacket make() const { return make_gaussian_packet(p0, dp, x_c, mu, n_points, span); }
};

struct DetectionConfig {
  double x = 0.0;
  double T_total = 0.0;
};

struct LambdaGridConfig {
  double Lambda = 40.0;
  std::size_t n_lambda = 4096;
  double taper = 0.1;
};

struct ProbeConfig {
  std::string name;
  std::vector<cplx> amps;
};

struct ClockConfig {
  int twice_j = 1;
  std::vector<double> omega_L;
  std::vector<cplx> gamma;
  std::vector<ProbeConfig> probes;
};

struct InterferometerConfig {
  TwoPathConfig arms;
  std::size_t sweep_points = 16;
};

/// A validated scenario with every default filled in. `echo` is the
/// normalised configuration, written into every output header.
struct ScenarioConfig {
  std::string id;
  ScenarioKind kind = ScenarioKind::taudist;
  std::optional<PacketConfig> packet;
  std::optional<BarrierSpec> barrier;
  std::optional<DetectionConfig> detection;
  std::optional<LambdaGridConfig> lambda_grid;
  std::optional<ClockConfig> clock;
  std::optional<InterferometerConfig> interferometer;
  std::optional<LatticeSpec> lattice;
  std::string output;
  json echo;
};

/// One validation problem, located by its dotted field path.
struct FieldError {
  std::string field;
  ErrorKind kind;
  std::string message;
};

/// A module error raised while running a scenario, tagged with the config
/// field it is attributed to.
class ScenarioError : public Error {
 public:
  ScenarioError(std::string field, const Error& cause) : Error(cause), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// `error: kind=<kind> field=<path> message=<text>`
inline std::string error_line(ErrorKind kind, const std::string& field, std::string message) {
  const std::string prefix = std::string(to_string(kind)) + ": ";
  if (message.rfind(prefix, 0) == 0) message.erase(0, prefix.size());
  return "error: kind=" + std::string(to_string(kind)) + " field=" + (field.empty() ? "-" : field) +
         " message=" + message;
}

struct ValidationResult {
  std::optional<ScenarioConfig> config;
  std::vector<FieldError> errors;

  bool ok() const noexcept { return config.has_value(); }
};

/// Smallest power of two >= 4096 whose tau period n pi / Lambda is at least
/// 4 T_total.
inline std::size_t default_n_lambda(double Lambda, double T_total) {
  std::size_t n = 4096;
  while (static_cast<double>(n) * std::numbers::pi / Lambda < 4.0 * T_total && n < (std::size_t{1} << 24)) n *= 2;
  return n;
}

namespace detail {

class ConfigReader {
 public:
  std::vector<FieldError> errors;

  void fail(const std::string& field, ErrorKind kind, const std::string& message) {
    errors.push_back({field, kind, message});
  }

  static std::string path(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
  }

  /// Number under obj[key]; missing keys take `def` if given, else fail.
  std::optional<double> number(const json& obj, const std::string& prefix, const std::string& key,
                               std::optional<double> def, json& norm) {
    const std::string p = path(prefix, key);
    if (!obj.contains(key)) {
      if (!def) {
        fail(p, ErrorKind::invalid_input, "missing required field");
        return std::nullopt;
      }
      norm[key] = *def;
      return def;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
      fail(p, ErrorKind::invalid_input, "expected a number");
      return std::nullopt;
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
      fail(p, ErrorKind::invalid_parameter, "must be finite");
      return std::nullopt;
    }
    norm[key] = d;
    return d;
  }

  std::optional<std::int64_t> integer(const json& obj, const std::string& prefix, const std::string& key,
                                      std::optional<std::int64_t> def, json& norm) {
    const std::string p = path(prefix, key);
    if (!obj.contains(key)) {
      if (!def) {
        fail(p, ErrorKind::invalid_input, "missing required field");
        return std::nullopt;
      }
      norm[key] = *def;
      return def;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
      fail(p, ErrorKind::invalid_input, "expected an integer");
      return std::nullopt;
    }
    const auto i = v.get<std::int64_t>();
    norm[key] = i;
    return i;
  }

  /// A complex number written as a plain number or as [re, im].
  std::optional<cplx> complex_value(const json& v, const std::string& p) {
    if (v.is_number()) return cplx(v.get<double>(), 0.0);
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
      const cplx z(v[0].get<double>(), v[1].get<double>());
      if (std::isfinite(z.real()) && std::isfinite(z.imag())) return z;
      fail(p, ErrorKind::invalid_parameter, "must be finite");
      return std::nullopt;
    }
    fail(p, ErrorKind::invalid_input, "expected a number or [re, im]");
    return std::nullopt;
  }

  std::optional<cplx> complex(const json& obj, const std::string& prefix, const std::string& key,
                              std::optional<cplx> def, json& norm) {
    const std::string p = path(prefix, key);
    if (!obj.contains(key)) {
      if (!def) {
        fail(p, ErrorKind::invalid_input, "missing required field");
        return std::nullopt;
      }
      norm[key] = json::array({def->real(), def->imag()});
      return def;
    }
    auto z = complex_value(obj.at(key), p);
    if (z) norm[key] = json::array({z->real(), z->imag()});
    return z;
  }

  const json* section(const json& root, const std::string& key) {
    if (!root.contains(key)) return nullptr;
    const json& s = root.at(key);
    if (!s.is_object()) {
      fail(key, ErrorKind::invalid_input, "expected an object");
      return nullptr;
    }
    return &s;
  }

  void unknown_keys(const json& obj, const std::string& prefix, std::initializer_list<const char*> known) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool found = false;
      for (const char* k : known) found = found || it.key() == k;
      if (!found) fail(path(prefix, it.key()), ErrorKind::invalid_input, "unknown field");
    }
  }

  /// Spin state given as {"theta": t, "phi": p} (coherent state) or
  /// {"components": [...]} in ascending m.
  std::optional<std::vector<cplx>> spin_spec(const json& v, const std::string& p, int twice_j, json& norm) {
    if (!v.is_object()) {
      fail(p, ErrorKind::invalid_input, "expected an object with theta/phi or components");
      return std::nullopt;
    }
    if (v.contains("components")) {
      const json& c = v.at("components");
      if (!c.is_array() || c.size() != static_cast<std::size_t>(twice_j + 1)) {
        fail(path(p, "components"), ErrorKind::invalid_input, "expected 2j+1 entries in ascending m");
        return std::nullopt;
      }
      std::vector<cplx> amps;
      json out = json::array();
      bool good = true;
      for (std::size_t i = 0; i < c.size(); ++i) {
        auto z = complex_value(c[i], path(p, "components") + "[" + std::to_string(i) + "]");
        if (!z) {
          good = false;
          continue;
        }
        amps.push_back(*z);
        out.push_back(json::array({z->real(), z->imag()}));
      }
      if (!good) return std::nullopt;
      double n = 0.0;
      for (const auto& a : amps) n += std::norm(a);
      if (!(n > 0.0)) {
        fail(path(p, "components"), ErrorKind::invalid_parameter, "spin state must have positive norm");
        return std::nullopt;
      }
      norm["components"] = out;
      return amps;
    }
    auto theta = number(v, p, "theta", std::nullopt, norm);
    auto phi = number(v, p, "phi", 0.0, norm);
    if (!theta || !phi) return std::nullopt;
    const auto st = spin_coherent(twice_j, *theta, *phi);
    return std::vector<cplx>(st.amps().begin(), st.amps().end());
  }
};

inline bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

inline void read_packet(ConfigReader& r, const json& s, ScenarioConfig& cfg, json& echo) {
  json norm = json::object();
  r.unknown_keys(s, "packet", {"p0", "dp", "x_c", "mu", "n_points", "span"});
  auto p0 = r.number(s, "packet", "p0", std::nullopt, norm);
  auto dp = r.number(s, "packet", "dp", std::nullopt, norm);
  auto xc = r.number(s, "packet", "x_c", std::nullopt, norm);
  auto mu = r.number(s, "packet", "mu", 1.0, norm);
  auto np = r.integer(s, "packet", "n_points", 512, norm);
  auto span = r.number(s, "packet", "span", 6.0, norm);
  bool good = p0 && dp && xc && mu && np && span;
  if (dp && !(*dp > 0.0)) r.fail("packet.dp", ErrorKind::invalid_parameter, "must be positive"), good = false;
  if (mu && !(*mu > 0.0)) r.fail("packet.mu", ErrorKind::invalid_parameter, "must be positive"), good = false;
  if (np && (*np < 16 || *np > 65536))
    r.fail("packet.n_points", ErrorKind::invalid_parameter, "must lie in 16..65536"), good = false;
  if (span && !(*span >= 6.0)) r.fail("packet.span", ErrorKind::invalid_parameter, "must be at least 6"), good = false;
  if (good && !(*p0 - *span * *dp > 0.0))
    r.fail("packet.p0", ErrorKind::invalid_parameter, "all grid momenta p0 +- span*dp must be positive"), good = false;
  echo["packet"] = norm;
  if (good) cfg.packet = PacketConfig{*p0, *dp, *xc, *mu, static_cast<std::size_t>(*np), *span};
}

inline void read_barrier(ConfigReader& r, const json& s, ScenarioConfig& cfg, json& echo) {
  json norm = json::object();
  if (s.contains("segments")) {
    r.unknown_keys(s, "barrier", {"segments"});
    const json& segs = s.at("segments");
    if (!segs.is_array() || segs.empty()) {
      r.fail("barrier.segments", ErrorKind::invalid_input, "expected a non-empty list of {width, height}");
      return;
    }
    std::vector<Segment> out;
    json arr = json::array();
    bool good = true;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const std::string p = "barrier.segments[" + std::to_string(i) + "]";
      if (!segs[i].is_object()) {
        r.fail(p, ErrorKind::invalid_input, "expected an object");
        good = false;
        continue;
      }
      json sn = json::object();
      r.unknown_keys(segs[i], p, {"width", "height"});
      auto w = r.number(segs[i], p, "width", std::nullopt, sn);
      auto h = r.number(segs[i], p, "height", std::nullopt, sn);
      if (w && !(*w > 0.0)) r.fail(p + ".width", ErrorKind::invalid_parameter, "must be positive"), w.reset();
      if (!w || !h) {
        good = false;
        continue;
      }
      out.push_back({*w, *h});
      arr.push_back(sn);
    }
    norm["segments"] = arr;
    echo["barrier"] = norm;
    if (good) cfg.barrier = BarrierSpec::piecewise(std::move(out));
    return;
  }
  r.unknown_keys(s, "barrier", {"V", "d"});
  auto V = r.number(s, "barrier", "V", std::nullopt, norm);
  auto d = r.number(s, "barrier", "d", std::nullopt, norm);
  if (d && !(*d > 0.0)) r.fail("barrier.d", ErrorKind::invalid_parameter, "must be positive"), d.reset();
  echo["barrier"] = norm;
  if (V && d) cfg.barrier = BarrierSpec::rectangle(*V, *d);
}

inline void read_detection(ConfigReader& r, const json& s, ScenarioConfig& cfg, json& echo) {
  json norm = json::object();
  r.unknown_keys(s, "detection", {"x", "T_total"});
  auto x = r.number(s, "detection", "x", std::nullopt, norm);
  auto T = r.number(s, "detection", "T_total", std::nullopt, norm);
  if (T && !(*T > 0.0)) r.fail("detection.T_total", ErrorKind::invalid_parameter, "must be positive"), T.reset();
  if (x && cfg.barrier && !(*x > cfg.barrier->width()))
    r.fail("detection.x", ErrorKind::unsupported_configuration, "detection point must lie behind the barrier (x > d)"),
        x.reset();
  echo["detection"] = norm;
  if (x && T) cfg.detection = DetectionConfig{*x, *T};
}

inline void read_lambda_grid(ConfigReader& r, const json* s, ScenarioConfig& cfg, json& echo) {
  static const json empty = json::object();
  const json& obj = s ? *s : empty;
  json norm = json::object();
  r.unknown_keys(obj, "lambda_grid", {"Lambda", "n_lambda", "taper"});
  auto L = r.number(obj, "lambda_grid", "Lambda", 40.0, norm);
  auto taper = r.number(obj, "lambda_grid", "taper", 0.1, norm);
  if (L && !(*L > 0.0)) r.fail("lambda_grid.Lambda", ErrorKind::invalid_parameter, "must be positive"), L.reset();
  if (taper && !(*taper >= 0.0 && *taper <= 0.5))
    r.fail("lambda_grid.taper", ErrorKind::invalid_parameter, "must lie in [0, 0.5]"), taper.reset();
  std::optional<std::int64_t> n;
  if (obj.contains("n_lambda")) {
    n = r.integer(obj, "lambda_grid", "n_lambda", std::nullopt, norm);
  } else if (L && cfg.detection) {
    n = static_cast<std::int64_t>(default_n_lambda(*L, cfg.detection->T_total));
    norm["n_lambda"] = *n;
  }
  if (n && (*n < 256 || *n > (std::int64_t{1} << 24) || !is_power_of_two(static_cast<std::size_t>(*n))))
    r.fail("lambda_grid.n_lambda", ErrorKind::invalid_parameter, "must be a power of two in 256..2^24"), n.reset();
  echo["lambda_grid"] = norm;
  if (L && taper && n) cfg.lambda_grid = LambdaGridConfig{*L, static_cast<std::size_t>(*n), *taper};
}

inline void read_clock(ConfigReader& r, const json& s, ScenarioConfig& cfg, json& echo) {
  json norm = json::object();
  r.unknown_keys(s, "clock", {"j", "omega_L", "gamma", "probes"});
  ClockConfig c;
  bool good = true;
  auto j = r.number(s, "clock", "j", 0.5, norm);
  if (j) {
    const double tj = 2.0 * *j;
    if (!(tj >= 1.0 && tj <= 20.0 && tj == std::floor(tj))) {
      r.fail("clock.j", ErrorKind::invalid_parameter, "must be a positive multiple of 1/2 up to 10");
      good = false;
    } else {
      c.twice_j = static_cast<int>(tj);
    }
  } else {
    good = false;
  }
  if (!s.contains("omega_L") || !s.at("omega_L").is_array() || s.at("omega_L").empty()) {
    r.fail("clock.omega_L", ErrorKind::invalid_input, "expected a non-empty list of numbers");
    good = false;
  } else {
    json arr = json::array();
    const json& om = s.at("omega_L");
    for (std::size_t i = 0; i < om.size(); ++i) {
      const std::string p = "clock.omega_L[" + std::to_string(i) + "]";
      if (!om[i].is_number() || !std::isfinite(om[i].get<double>()) || om[i].get<double>() < 0.0) {
        r.fail(p, ErrorKind::invalid_parameter, "must be a finite number >= 0");
        good = false;
        continue;
      }
      c.omega_L.push_back(om[i].get<double>());
      arr.push_back(om[i].get<double>());
    }
    norm["omega_L"] = arr;
  }
  if (!good) {
    echo["clock"] = norm;
    return;
  }
  json gnorm = json::object();
  if (s.contains("gamma")) {
    auto g = r.spin_spec(s.at("gamma"), "clock.gamma", c.twice_j, gnorm);
    if (g) c.gamma = *g; else good = false;
  } else {
    gnorm["theta"] = std::numbers::pi / 2.0;
    gnorm["phi"] = 0.0;
    const auto up = spin_up_x(c.twice_j);
    c.gamma.assign(up.amps().begin(), up.amps().end());
  }
  norm["gamma"] = gnorm;
  json pnorm = json::array();
  if (s.contains("probes")) {
    const json& pr = s.at("probes");
    if (!pr.is_array() || pr.empty()) {
      r.fail("clock.probes", ErrorKind::invalid_input, "expected a non-empty list of probes");
      good = false;
    } else {
      for (std::size_t i = 0; i < pr.size(); ++i) {
        const std::string p = "clock.probes[" + std::to_string(i) + "]";
        json one = json::object();
        if (!pr[i].is_object() || !pr[i].contains("name") || !pr[i].at("name").is_string() ||
            !valid_name(pr[i].at("name").get<std::string>())) {
          r.fail(p + ".name", ErrorKind::invalid_input, "probe needs a name made of [A-Za-z0-9_-]");
          good = false;
          continue;
        }
        const std::string name = pr[i].at("name").get<std::string>();
        for (const auto& existing : c.probes)
          if (existing.name == name) r.fail(p + ".name", ErrorKind::invalid_input, "duplicate probe name"), good = false;
        json spec = pr[i];
        spec.erase("name");
        auto amps = r.spin_spec(spec, p, c.twice_j, one);
        if (!amps) {
          good = false;
          continue;
        }
        one["name"] = name;
        c.probes.push_back({name, *amps});
        pnorm.push_back(one);
      }
    }
  } else {
    // Default pair: +y (a non-orthogonal probe) and -x (orthogonal to +x).
    const double h = std::numbers::pi / 2.0;
    for (const auto& [name, phi] : {std::pair<const char*, double>{"up_y", h}, {"down_x", std::numbers::pi}}) {
      const auto st = spin_coherent(c.twice_j, h, phi);
      c.probes.push_back({name, std::vector<cplx>(st.amps().begin(), st.amps().end())});
      pnorm.push_back({{"name", name}, {"theta", h}, {"phi", phi}});
    }
  }
  norm["probes"] = pnorm;
  echo["clock"] = norm;
  if (good) cfg.clock = std::move(c);
}

inline void read_interferometer(ConfigReader& r, const json& s, ScenarioConfig& cfg, json& echo) {
  json norm = json::object();
  r.unknown_keys(s, "interferometer", {"G1", "G2", "tau1", "tau2", "omega_L", "T_total", "sweep_points"});
  auto G1 = r.complex(s, "interferometer", "G1", std::nullopt, norm);
  auto G2 = r.complex(s, "interferometer", "G2", std::nullopt, norm);
  auto t1 = r.number(s, "interferometer", "tau1", std::nullopt, norm);
  auto t2 = r.number(s, "interferometer", "tau2", std::nullopt, norm);
  auto om = r.number(s, "interferometer", "omega_L", 1e-3, norm);
  auto T = r.number(s, "interferometer", "T_total", std::nullopt, norm);
  auto sw = r.integer(s, "interferometer", "sweep_points", 16, norm);
  if (T && !(*T > 0.0)) r.fail("interferometer.T_total", ErrorKind::invalid_parameter, "must be positive"), T.reset();
  if (om && !(*om > 0.0)) r.fail("interferometer.omega_L", ErrorKind::invalid_parameter, "must be positive"), om.reset();
  if (sw && (*sw < 1 || *sw > 100000))
    r.fail("interferometer.sweep_points", ErrorKind::invalid_parameter, "must lie in 1..100000"), sw.reset();
  if (T && t1 && !(*t1 >= 0.0 && *t1 <= *T))
    r.fail("interferometer.tau1", ErrorKind::invalid_parameter, "must lie in [0, T_total]"), t1.reset();
  if (T && t2 && !(*t2 >= 0.0 && *t2 <= *T))
    r.fail("interferometer.tau2", ErrorKind::invalid_parameter, "must lie in [0, T_total]"), t2.reset();
  echo["interferometer"] = norm;
  if (G1 && G2 && t1 && t2 && om && T && sw)
    cfg.interferometer = InterferometerConfig{TwoPathConfig{*G1, *G2, *t1, *t2, *om, *T}, static_cast<std::size_t>(*sw)};
}

inline void read_lattice(ConfigReader& r, const json& s, ScenarioConfig& cfg, json& echo) {
  json norm = json::object();
  r.unknown_keys(s, "lattice", {"n_sites", "region", "hop", "random_seed", "n_steps", "dt", "start", "end"});
  LatticeSpec spec;
  bool good = true;
  auto n = r.integer(s, "lattice", "n_sites", std::nullopt, norm);
  if (n && (*n < 1 || *n > static_cast<std::int64_t>(kMaxLatticeSites)))
    r.fail("lattice.n_sites", ErrorKind::invalid_parameter, "must lie in 1..8"), n.reset();
  auto steps = r.integer(s, "lattice", "n_steps", std::nullopt, norm);
  if (steps && *steps < 0) r.fail("lattice.n_steps", ErrorKind::invalid_parameter, "must be >= 0"), steps.reset();
  if (steps && *steps > static_cast<std::int64_t>(kMaxLatticeSteps))
    r.fail("lattice.n_steps", ErrorKind::too_large_lattice, "must not exceed 12"), steps.reset();
  auto dt = r.number(s, "lattice", "dt", 1.0, norm);
  if (dt && !(*dt > 0.0)) r.fail("lattice.dt", ErrorKind::invalid_parameter, "must be positive"), dt.reset();
  auto start = r.integer(s, "lattice", "start", std::nullopt, norm);
  auto end = r.integer(s, "lattice", "end", std::nullopt, norm);
  if (!(n && steps && dt && start && end)) good = false;
  if (good) {
    if (*start < 0 || *start >= *n) r.fail("lattice.start", ErrorKind::invalid_parameter, "site out of range"), good = false;
    if (*end < 0 || *end >= *n) r.fail("lattice.end", ErrorKind::invalid_parameter, "site out of range"), good = false;
  }
  if (!s.contains("region") || !s.at("region").is_array() || s.at("region").empty()) {
    r.fail("lattice.region", ErrorKind::invalid_input, "expected a non-empty list of site indices");
    good = false;
  } else {
    json arr = json::array();
    for (const auto& v : s.at("region")) {
      if (!v.is_number_integer() || (n && (v.get<std::int64_t>() < 0 || v.get<std::int64_t>() >= *n))) {
        r.fail("lattice.region", ErrorKind::invalid_parameter, "site index out of range");
        good = false;
        break;
      }
      spec.region.push_back(static_cast<std::size_t>(v.get<std::int64_t>()));
      arr.push_back(v.get<std::int64_t>());
    }
    norm["region"] = arr;
  }
  const bool has_hop = s.contains("hop");
  const bool has_seed = s.contains("random_seed");
  if (has_hop == has_seed) {
    r.fail("lattice.hop", ErrorKind::invalid_input, "give exactly one of hop or random_seed");
    good = false;
  } else if (n && has_seed) {
    auto seed = r.integer(s, "lattice", "random_seed", std::nullopt, norm);
    if (seed && *seed >= 0) {
      spec.hop = random_unitary(static_cast<std::size_t>(*n), static_cast<std::uint64_t>(*seed));
    } else {
      if (seed) r.fail("lattice.random_seed", ErrorKind::invalid_parameter, "must be >= 0");
      good = false;
    }
  } else if (n) {
    const json& h = s.at("hop");
    const auto N = static_cast<std::size_t>(*n);
    if (!h.is_array() || h.size() != N) {
      r.fail("lattice.hop", ErrorKind::invalid_input, "expected an n_sites x n_sites matrix");
      good = false;
    } else {
      spec.hop = Eigen::MatrixXcd(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
      json rows = json::array();
      for (std::size_t i = 0; i < N && good; ++i) {
        if (!h[i].is_array() || h[i].size() != N) {
          r.fail("lattice.hop[" + std::to_string(i) + "]", ErrorKind::invalid_input, "expected n_sites entries");
          good = false;
          break;
        }
        json row = json::array();
        for (std::size_t k = 0; k < N; ++k) {
          auto z = r.complex_value(h[i][k], "lattice.hop[" + std::to_string(i) + "][" + std::to_string(k) + "]");
          if (!z) {
            good = false;
            break;
          }
          spec.hop(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = *z;
          row.push_back(json::array({z->real(), z->imag()}));
        }
        rows.push_back(row);
      }
      norm["hop"] = rows;
    }
  } else {
    good = false;
  }
  echo["lattice"] = norm;
  if (!good) return;
  spec.n_sites = static_cast<std::size_t>(*n);
  spec.n_steps = static_cast<std::size_t>(*steps);
  spec.dt = *dt;
  spec.start = static_cast<std::size_t>(*start);
  spec.end = static_cast<std::size_t>(*end);
  try {
    spec.validate();
    cfg.lattice = std::move(spec);
  } catch (const Error& e) {
    const std::string field = e.kind() == ErrorKind::too_large_lattice ? "lattice.n_steps"
                              : has_hop                                ? "lattice.hop"
                                                                       : "lattice";
    r.fail(field, e.kind(), e.what());
  }
}

}  // namespace detail

/// Structural and physical validation of a raw scenario. Every problem is
/// collected; the config is returned only when there are none.
inline ValidationResult validate_config(const json& raw) {
  ValidationResult out;
  detail::ConfigReader r;
  if (!raw.is_object()) {
    out.errors.push_back({"", ErrorKind::invalid_input, "config must be a JSON object"});
    return out;
  }
  ScenarioConfig cfg;
  json echo = json::object();

  std::optional<ScenarioKind> kind;
  if (!raw.contains("kind") || !raw.at("kind").is_string()) {
    r.fail("kind", ErrorKind::invalid_input, "missing or non-string kind (taudist | clock | interferometer | oracle)");
  } else {
    kind = parse_kind(raw.at("kind").get<std::string>());
    if (!kind) r.fail("kind", ErrorKind::invalid_input, "unknown kind '" + raw.at("kind").get<std::string>() + "'");
  }
  if (raw.contains("id") && !(raw.at("id").is_string() && detail::valid_name(raw.at("id").get<std::string>())))
    r.fail("id", ErrorKind::invalid_input, "id must be a non-empty string of [A-Za-z0-9_-]");
  if (raw.contains("output") && !(raw.at("output").is_string() && !raw.at("output").get<std::string>().empty()))
    r.fail("output", ErrorKind::invalid_input, "output must be a non-empty path prefix");

  static const char* const kSections[] = {"packet", "barrier", "detection", "lambda_grid",
                                          "clock",  "interferometer", "lattice"};
  for (auto it = raw.begin(); it != raw.end(); ++it) {
    const bool known = it.key() == "id" || it.key() == "kind" || it.key() == "output" ||
                       std::find_if(std::begin(kSections), std::end(kSections),
                                    [&](const char* s) { return it.key() == s; }) != std::end(kSections);
    if (!known) r.fail(it.key(), ErrorKind::invalid_input, "unknown field");
  }

  if (kind) {
    cfg.kind = *kind;
    echo["kind"] = to_string(*kind);
    cfg.id = raw.contains("id") && raw.at("id").is_string() ? raw.at("id").get<std::string>() : to_string(*kind);
    echo["id"] = cfg.id;
    cfg.output = raw.contains("output") && raw.at("output").is_string() ? raw.at("output").get<std::string>() : cfg.id;
    echo["output"] = cfg.output;

    std::vector<std::string> required;
    std::vector<std::string> optional;
    switch (*kind) {
      case ScenarioKind::taudist:
        required = {"packet", "barrier", "detection"};
        optional = {"lambda_grid"};
        break;
      case ScenarioKind::clock: required = {"packet", "barrier", "detection", "clock"}; break;
      case ScenarioKind::interferometer: required = {"interferometer"}; break;
      case ScenarioKind::oracle: required = {"lattice"}; break;
    }
    for (const char* s : kSections) {
      const bool req = std::find(required.begin(), required.end(), s) != required.end();
      const bool opt = std::find(optional.begin(), optional.end(), s) != optional.end();
      if (raw.contains(s) && !req && !opt)
        r.fail(s, ErrorKind::invalid_input, "not used by kind " + to_string(*kind));
      if (!raw.contains(s) && req) r.fail(s, ErrorKind::invalid_input, "missing section required by kind " + to_string(*kind));
    }

    auto has = [&](const char* s) {
      return std::find(required.begin(), required.end(), s) != required.end();
    };
    if (has("packet"))
      if (const json* s = r.section(raw, "packet")) detail::read_packet(r, *s, cfg, echo);
    if (has("barrier"))
      if (const json* s = r.section(raw, "barrier")) detail::read_barrier(r, *s, cfg, echo);
    if (has("detection"))
      if (const json* s = r.section(raw, "detection")) detail::read_detection(r, *s, cfg, echo);
    if (*kind == ScenarioKind::taudist) {
      const json* s = raw.contains("lambda_grid") ? r.section(raw, "lambda_grid") : nullptr;
      if (!raw.contains("lambda_grid") || s) detail::read_lambda_grid(r, s, cfg, echo);
    }
    if (has("clock"))
      if (const json* s = r.section(raw, "clock")) detail::read_clock(r, *s, cfg, echo);
    if (has("interferometer"))
      if (const json* s = r.section(raw, "interferometer")) detail::read_interferometer(r, *s, cfg, echo);
    if (has("lattice"))
      if (const json* s = r.section(raw, "lattice")) detail::read_lattice(r, *s, cfg, echo);
  }

  out.errors = std::move(r.errors);
  if (out.errors.empty()) {
    cfg.echo = std::move(echo);
    out.config = std::move(cfg);
  }
  return out;
}

/// Parses a JSON file; unreadable files raise io, malformed JSON invalid-input.
inline json load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  detail::require(static_cast<bool>(in), ErrorKind::io, "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::invalid_input, std::string("malformed JSON: ") + e.what());
  }
}

/// Files produced by a run (path suffix -> contents) and the text echoed to
/// standard output.
struct RunOutput {
  std::vector<std::pair<std::string, std::string>> files;
  std::string summary;
};

namespace detail {

class Summary {
 public:
  void add(const std::string& key, const std::string& value) { text_ += key + " = " + value + "\n"; }
  void add(const std::string& key, double value) { add(key, fmt17(value)); }
  void line(const std::string& s) { text_ += s + "\n"; }
  const std::string& str() const noexcept { return text_; }

 private:
  std::string text_;
};

inline void common_meta(CsvTable& t, const ScenarioConfig& cfg) {
  t.meta("tauclock", to_string(cfg.kind));
  t.meta("id", cfg.id);
  t.meta("config", cfg.echo.dump());
}

template <class F>
auto attributed(const std::string& field, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ScenarioError&) {
    throw;
  } catch (const Error& e) {
    throw ScenarioError(field, e);
  }
}

inline RunOutput run_taudist(const ScenarioConfig& cfg) {
  const auto packet = attributed("packet", [&] { return cfg.packet->make(); });
  const auto& barrier = *cfg.barrier;
  const auto& det = *cfg.detection;
  const auto& grid = *cfg.lambda_grid;
  const auto taper = grid.taper > 0.0 ? Taper::raised_cosine(grid.taper) : Taper::none();

  const auto scan = attributed("lambda_grid", [&] {
    return lambda_scan(packet, barrier, det.x, det.T_total, grid.Lambda, grid.n_lambda);
  });
  const auto dist = attributed("lambda_grid", [&] { return invert_to_tau(scan, det.T_total, taper); });
  const TransmittedAmplitude amplitude(packet, barrier, det.x, det.T_total);
  const cplx a0 = amplitude(0.0);
  const auto by_derivative = attributed("barrier", [&] { return complex_time_by_derivative(amplitude, 1e-2); });
  const cplx sum = sum_rule_check(dist);
  const double sum_rel = std::abs(sum - a0) / std::abs(a0);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  ComplexTime by_moment(cplx(nan, nan));
  if (dist.converged()) by_moment = attributed("barrier", [&] { return complex_time(dist); });
  const double gap = std::abs(by_moment.value() - by_derivative.value()) / by_derivative.modulus;

  CsvTable t;
  common_meta(t, cfg);
  t.meta("Lambda", grid.Lambda);
  t.meta("n_lambda", std::to_string(grid.n_lambda));
  t.meta("lambda_first", dist.meta().lambda_first);
  t.meta("lambda_step", dist.meta().lambda_step);
  t.meta("reference_height", dist.meta().reference_height);
  t.meta("taper", taper.describe());
  t.meta("T_total", det.T_total);
  t.meta("tau_step", dist.tau_step());
  t.meta("leakage", dist.leakage());
  t.meta("converged", dist.converged() ? "true" : "false");
  t.columns({"tau", "re_A", "im_A", "abs_A"});
  const auto v = dist.values();
  for (std::size_t k = 0; k < v.size(); ++k)
    t.row({fmt17(dist.tau(k)), fmt17(v[k].real()), fmt17(v[k].imag()), fmt17(std::abs(v[k]))});

  Summary s;
  s.add("id", cfg.id);
  s.add("kind", "taudist");
  s.add("tunnelling", tunnels(packet, barrier) ? "true" : "false");
  s.add("converged", dist.converged() ? "true" : "false");
  s.add("leakage", dist.leakage());
  s.add("re_tau", by_moment.re);
  s.add("im_tau", by_moment.im);
  s.add("abs_tau", by_moment.modulus);
  s.add("re_tau_derivative", by_derivative.re);
  s.add("im_tau_derivative", by_derivative.im);
  s.add("abs_tau_derivative", by_derivative.modulus);
  s.add("pipeline_relative_gap", gap);
  s.add("re_amplitude", a0.real());
  s.add("im_amplitude", a0.imag());
  s.add("sum_rule_relative_error", sum_rel);
  if (!dist.converged()) s.line("# moment pipeline skipped: leakage at or above 0.01; widen lambda_grid");

  RunOutput out;
  out.files.push_back({".csv", t.str()});
  out.files.push_back({".summary.txt", s.str()});
  out.summary = s.str();
  return out;
}

inline RunOutput run_clock(const ScenarioConfig& cfg) {
  const auto packet = attributed("packet", [&] { return cfg.packet->make(); });
  const auto& det = *cfg.detection;
  const auto& clk = *cfg.clock;
  const TransmittedAmplitude amplitude(packet, *cfg.barrier, det.x, det.T_total);
  const auto tau = attributed("barrier", [&] { return complex_time_by_derivative(amplitude, 1e-2); });
  const SpinState gamma = SpinState(clk.twice_j, clk.gamma).normalized();
  std::vector<SpinState> probes;
  for (const auto& p : clk.probes) probes.push_back(SpinState(clk.twice_j, p.amps).normalized());

  CsvTable t;
  common_meta(t, cfg);
  t.meta("j", 0.5 * clk.twice_j);
  t.meta("tau_pipeline", "lambda-derivative");
  t.meta("re_amplitude", amplitude(0.0).real());
  t.meta("im_amplitude", amplitude(0.0).imag());
  std::vector<std::string> cols = {"id", "omega_L", "delta_phi", "delta_theta", "re_tau", "im_tau", "abs_tau"};
  for (const auto& p : clk.probes) cols.push_back("P_" + p.name);
  t.columns(cols);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (double om : clk.omega_L) {
    const auto final_state = final_spin_state(amplitude, om, gamma);
    double dphi = nan;
    double dtheta = nan;
    if (clk.twice_j == 1) {
      const auto r = attributed("clock", [&] { return baz_angles(final_state, om); });
      dphi = r.delta_phi;
      dtheta = r.delta_theta;
    }
    std::vector<std::string> row = {cfg.id, fmt17(om), fmt17(dphi), fmt17(dtheta),
                                    fmt17(tau.re), fmt17(tau.im), fmt17(tau.modulus)};
    for (const auto& b : probes) row.push_back(fmt17(detection_probability(final_state, b)));
    t.row(row);
  }

  Summary s;
  s.add("id", cfg.id);
  s.add("kind", "clock");
  s.add("tunnelling", tunnels(packet, *cfg.barrier) ? "true" : "false");
  s.add("re_tau", tau.re);
  s.add("im_tau", tau.im);
  s.add("abs_tau", tau.modulus);
  s.add("T_total", det.T_total);
  s.add("exceeds_total", tau.modulus > det.T_total ? "true" : "false");
  s.add("rows", std::to_string(clk.omega_L.size()));

  RunOutput out;
  out.files.push_back({".csv", t.str()});
  out.files.push_back({".summary.txt", s.str()});
  out.summary = s.str();
  return out;
}

inline RunOutput run_interferometer(const ScenarioConfig& cfg) {
  const auto& ic = *cfg.interferometer;
  const auto& c = ic.arms;
  const auto tau = attributed("interferometer.G2", [&] { return weak_mean_time(c); });
  const auto readout = attributed("interferometer", [&] { return precession_angles(c); });
  const auto flags = classify(tau, c.T_total);
  const auto rows = attributed("interferometer", [&] { return phase_sweep(c, ic.sweep_points); });

  CsvTable t;
  common_meta(t, cfg);
  t.meta("omega_L", c.omega_L);
  t.meta("T_total", c.T_total);
  t.columns({"phi", "re_tau", "im_tau", "delta_phi_over_omega", "delta_theta_over_omega"});
  for (const auto& r : rows)
    t.row({fmt17(r.phi), fmt17(r.tau.re), fmt17(r.tau.im), fmt17(r.phi_rate), fmt17(r.theta_rate)});

  Summary s;
  s.add("id", cfg.id);
  s.add("kind", "interferometer");
  s.add("re_tau", tau.re);
  s.add("im_tau", tau.im);
  s.add("abs_tau", tau.modulus);
  s.add("delta_phi", readout.delta_phi);
  s.add("delta_theta", readout.delta_theta);
  s.add("delta_phi_over_omega", readout.tau_inferred.re);
  s.add("delta_theta_over_omega", readout.tau_inferred.im);
  s.add("T_total", c.T_total);
  s.add("negative", flags.negative ? "true" : "false");
  s.add("exceeds_total", flags.exceeds_total ? "true" : "false");
  if (c.tau1 != c.tau2) {
    const auto a = solve_alphas(c.tau1, c.tau2, tau.value());
    const cplx m2 = alpha_second_moment(a, c.tau1, c.tau2);
    s.add("re_alpha1", a.alpha1.real());
    s.add("im_alpha1", a.alpha1.imag());
    s.add("re_alpha2", a.alpha2.real());
    s.add("im_alpha2", a.alpha2.imag());
    s.add("re_second_moment", m2.real());
    s.add("im_second_moment", m2.imag());
  }

  RunOutput out;
  out.files.push_back({".csv", t.str()});
  out.files.push_back({".summary.txt", s.str()});
  out.summary = s.str();
  return out;
}

inline RunOutput run_oracle(const ScenarioConfig& cfg) {
  const auto& spec = *cfg.lattice;
  const auto rep = attributed("lattice", [&] { return equivalence_report(spec); });
  const auto all = attributed("lattice", [&] { return path_sum_tau_all_ends(spec); });
  double unitarity = 0.0;
  for (const auto& e : all) unitarity += std::norm(e.total());

  CsvTable t;
  common_meta(t, cfg);
  t.meta("n_steps", std::to_string(spec.n_steps));
  t.meta("dt", spec.dt);
  t.meta("max_discrepancy", rep.max_discrepancy);
  t.columns({"n", "tau", "re_path", "im_path", "abs_path", "re_fourier", "im_fourier", "abs_fourier"});
  for (std::size_t n = 0; n < rep.path_sum.size(); ++n) {
    const cplx a = rep.path_sum[n];
    const cplx b = rep.fourier[n];
    t.row({std::to_string(n), fmt17(static_cast<double>(n) * spec.dt), fmt17(a.real()), fmt17(a.imag()),
           fmt17(std::abs(a)), fmt17(b.real()), fmt17(b.imag()), fmt17(std::abs(b))});
  }

  cplx total{};
  for (const auto& a : rep.path_sum) total += a;
  Summary s;
  s.add("id", cfg.id);
  s.add("kind", "oracle");
  s.add("n_sites", std::to_string(spec.n_sites));
  s.add("n_steps", std::to_string(spec.n_steps));
  s.add("max_discrepancy", rep.max_discrepancy);
  s.line(rep.max_discrepancy < 1e-12 ? "max_discrepancy < 1e-12" : "max_discrepancy >= 1e-12");
  s.add("re_propagator", rep.propagator.real());
  s.add("im_propagator", rep.propagator.imag());
  s.add("propagator_mismatch", std::abs(total - rep.propagator));
  s.add("unitarity_sum", unitarity);

  RunOutput out;
  out.files.push_back({".csv", t.str()});
  out.files.push_back({".report.txt", s.str()});
  out.summary = s.str();
  return out;
}

}  // namespace detail

/// Runs a validated scenario. Module errors come back as ScenarioError,
/// tagged with the config field they are attributed to.
inline RunOutput run_scenario(const ScenarioConfig& cfg) {
  switch (cfg.kind) {
    case ScenarioKind::taudist: return detail::run_taudist(cfg);
    case ScenarioKind::clock: return detail::run_clock(cfg);
    case ScenarioKind::interferometer: return detail::run_interferometer(cfg);
    case ScenarioKind::oracle: return detail::run_oracle(cfg);
  }
  throw Error(ErrorKind::invalid_input, "unknown scenario kind");
}

}  // namespace tauclock
