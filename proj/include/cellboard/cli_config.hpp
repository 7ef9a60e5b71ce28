#pragma once

// Run configuration for the command-line driver: one flat JSON document,
// file values first, then command-line flags on top. Unknown keys and
// wrong types are configuration errors.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cellboard/errors.hpp"
#include "cellboard/geometry.hpp"
#include "cellboard/mc.hpp"
#include "cellboard/model.hpp"
#include "cellboard/transfer.hpp"
#include "json.hpp"

namespace cellboard {

inline constexpr const char* kOutDirEnv = "CELLBOARD_OUT_DIR";

struct Guards {
  int max_free = kMaxFreeSpins;
  int max_tm_height = kMaxTransferHeight;
  int max_sweep_sites = kMaxSweepSites;
  int max_corollary_spins = 16;
};

struct RunConfig {
  // model
  std::string kind = "cellboard";
  int L1 = 1;
  int L2 = 1;
  int L = 1;  // strip height
  int N = 2;
  double J = 1;
  double h = 1;
  double beta = 1;
  std::vector<double> betas;  // two-point and scans; empty means the check's default
  std::vector<double> hs;     // scans
  double c = kDefaultCombinatorialC;
  std::optional<double> strip_k;
  // verification inputs
  int trials = 50;
  std::optional<std::uint64_t> pattern;
  std::vector<int> s{0, 0};
  std::optional<std::vector<int>> t;
  // Monte Carlo
  std::uint64_t seed = 1;
  long sweeps = 10000;
  long burn_in = 1000;
  long thin = 1;
  std::string init = "plus";
  int chains = 1;
  std::vector<std::vector<int>> pins;  // [t1, t2, spin]
  std::optional<int> boundary;
  bool dat = false;
  long mc_sweeps = 1000000;
  long coexistence_sweeps = 20000;
  // run control
  std::optional<std::string> out;
  std::string out_dir = "cellboard_out";
  int threads = 0;
  bool slow = false;
  Guards guards;

  ModelGeometry geometry() const {
    if (kind == "cellboard") return ModelGeometry::cell_board(L1, L2, N);
    if (kind == "strip") return ModelGeometry::strip(L, N);
    throw ConfigError("kind must be 'cellboard' or 'strip', got '" + kind + "'");
  }

  ModelParams params() const {
    ModelParams p{J, h, beta};
    p.validate();
    return p;
  }

  Site site_s() const { return to_site(s, "s"); }
  Site site_t(const ModelGeometry& g) const {
    if (t) return to_site(*t, "t");
    return {s[0] + g.width() / 2, s[1]};
  }

  std::vector<Pin> pin_list(const ModelGeometry& g) const {
    std::vector<Pin> out_pins;
    for (const auto& p : pins) {
      if (p.size() != 3) throw ConfigError("each pin is [t1, t2, spin]");
      out_pins.emplace_back(g.index({p[0], p[1]}), p[2]);
    }
    return out_pins;
  }

  ChainSpec chain_spec() const {
    ChainSpec cs;
    cs.geom = geometry();
    cs.params = params();
    cs.init = parse_init(init);
    cs.sweeps = sweeps;
    cs.burn_in = burn_in;
    cs.thin = thin;
    cs.seed = seed;
    cs.pinned = pin_list(cs.geom);
    cs.boundary = boundary;
    return cs;
  }

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);

 private:
  static Site to_site(const std::vector<int>& v, const char* name) {
    if (v.size() != 2) throw ConfigError(std::string(name) + " must be [t1, t2]");
    return {v[0], v[1]};
  }
};

namespace detail {

template <class T>
void read(const nlohmann::json& v, T& dst) {
  dst = v.get<T>();
}
template <class T>
void read(const nlohmann::json& v, std::optional<T>& dst) {
  if (v.is_null()) {
    dst.reset();
  } else {
    dst = v.get<T>();
  }
}

using Setter = std::function<void(RunConfig&, const nlohmann::json&)>;

inline const std::map<std::string, Setter>& setters() {
#define CB_FIELD(name) {#name, [](RunConfig& c, const nlohmann::json& v) { read(v, c.name); }}
#define CB_GUARD(name) {#name, [](RunConfig& c, const nlohmann::json& v) { read(v, c.guards.name); }}
  static const std::map<std::string, Setter> table{
      CB_FIELD(kind),    CB_FIELD(L1),        CB_FIELD(L2),
      CB_FIELD(L),       CB_FIELD(N),         CB_FIELD(J),
      CB_FIELD(h),       CB_FIELD(beta),      CB_FIELD(betas),
      CB_FIELD(hs),      CB_FIELD(c),         CB_FIELD(strip_k),
      CB_FIELD(trials),  CB_FIELD(pattern),   CB_FIELD(s),
      CB_FIELD(t),       CB_FIELD(seed),      CB_FIELD(sweeps),
      CB_FIELD(burn_in), CB_FIELD(thin),      CB_FIELD(init),
      CB_FIELD(chains),  CB_FIELD(pins),      CB_FIELD(boundary),
      CB_FIELD(dat),     CB_FIELD(mc_sweeps), CB_FIELD(coexistence_sweeps),
      CB_FIELD(out),     CB_FIELD(out_dir),   CB_FIELD(threads),
      CB_FIELD(slow),    CB_GUARD(max_free),  CB_GUARD(max_tm_height),
      CB_GUARD(max_sweep_sites), CB_GUARD(max_corollary_spins)};
#undef CB_FIELD
#undef CB_GUARD
  return table;
}

template <class T>
nlohmann::json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

inline nlohmann::json RunConfig::to_json() const {
  return {{"kind", kind},
          {"L1", L1},
          {"L2", L2},
          {"L", L},
          {"N", N},
          {"J", J},
          {"h", h},
          {"beta", beta},
          {"betas", betas},
          {"hs", hs},
          {"c", c},
          {"strip_k", detail::opt_json(strip_k)},
          {"trials", trials},
          {"pattern", detail::opt_json(pattern)},
          {"s", s},
          {"t", detail::opt_json(t)},
          {"seed", seed},
          {"sweeps", sweeps},
          {"burn_in", burn_in},
          {"thin", thin},
          {"init", init},
          {"chains", chains},
          {"pins", pins},
          {"boundary", detail::opt_json(boundary)},
          {"dat", dat},
          {"mc_sweeps", mc_sweeps},
          {"coexistence_sweeps", coexistence_sweeps},
          {"out", detail::opt_json(out)},
          {"out_dir", out_dir},
          {"threads", threads},
          {"slow", slow},
          {"max_free", guards.max_free},
          {"max_tm_height", guards.max_tm_height},
          {"max_sweep_sites", guards.max_sweep_sites},
          {"max_corollary_spins", guards.max_corollary_spins}};
}

inline RunConfig RunConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  RunConfig c;
  const auto& table = detail::setters();
  for (const auto& [key, value] : j.items()) {
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown configuration key '" + key + "'");
    try {
      it->second(c, value);
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError("bad value for '" + key + "': " + ex.what());
    }
  }
  if (c.threads < 0) throw ConfigError("threads must be >= 0");
  if (c.trials < 1) throw ConfigError("trials must be >= 1");
  if (c.chains < 1) throw ConfigError("chains must be >= 1");
  if (c.guards.max_free < 1 || c.guards.max_free > 40) throw ConfigError("max_free must be in [1, 40]");
  return c;
}

inline nlohmann::json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + ex.what());
  }
}

// File values, then the output-directory environment override, then flags.
inline RunConfig effective_config(const nlohmann::json& file, const nlohmann::json& flags,
                                  const char* env_out_dir = std::getenv(kOutDirEnv)) {
  nlohmann::json merged = file.is_null() ? nlohmann::json::object() : file;
  if (!merged.is_object()) throw ConfigError("configuration must be a JSON object");
  if (env_out_dir && *env_out_dir) merged["out_dir"] = env_out_dir;
  for (const auto& [k, v] : flags.items()) merged[k] = v;
  return RunConfig::from_json(merged);
}

// Explicit --out wins; otherwise <out_dir>/<stem>.json.
inline std::filesystem::path output_path(const RunConfig& c, const std::string& stem) {
  if (c.out) return *c.out;
  return std::filesystem::path(c.out_dir) / (stem + ".json");
}

inline std::filesystem::path sibling(const std::filesystem::path& p, const std::string& ext) {
  auto q = p;
  q.replace_extension(ext);
  return q;
}

}  // namespace cellboard
