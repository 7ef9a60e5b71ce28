#pragma once

// Single-site Metropolis on the torus, or on the W x H box with the outside
// frozen to a +-1 boundary. Raster sweep order; acceptance from a lookup
// table indexed by neighbour sum and field alignment.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cellboard/contour.hpp"
#include "cellboard/energy.hpp"
#include "cellboard/errors.hpp"
#include "cellboard/geometry.hpp"
#include "cellboard/model.hpp"
#include "cellboard/parallel.hpp"
#include "cellboard/rng.hpp"
#include "cellboard/stats.hpp"
#include "json.hpp"

namespace cellboard {

enum class InitKind { Plus, Minus, Cell, Random };

inline std::string to_string(InitKind k) {
  switch (k) {
    case InitKind::Plus: return "plus";
    case InitKind::Minus: return "minus";
    case InitKind::Cell: return "cellboard";
    case InitKind::Random: return "random";
  }
  return "random";
}

inline InitKind parse_init(const std::string& s) {
  if (s == "plus") return InitKind::Plus;
  if (s == "minus") return InitKind::Minus;
  if (s == "cellboard" || s == "cell") return InitKind::Cell;
  if (s == "random") return InitKind::Random;
  throw ConfigError("unknown init '" + s + "' (plus, minus, cellboard, random)");
}

struct ChainSpec {
  ModelGeometry geom = ModelGeometry::cell_board(1, 1, 2);
  ModelParams params;
  InitKind init = InitKind::Plus;
  long sweeps = 1000;
  long burn_in = 100;
  long thin = 1;
  std::uint64_t seed = 1;
  std::uint32_t chain = 0;
  std::vector<Pin> pinned;
  std::optional<int> boundary;     // open-box mode with this frozen outside spin
  std::vector<int> observe_sites;  // site marginals recorded per sample
  bool record_bad_fraction = true;

  void validate() const {
    params.validate();
    if (sweeps <= burn_in || burn_in < 0) throw ConfigError("need sweeps > burn_in >= 0");
    if (thin < 1) throw ConfigError("thin must be at least 1");
    if (boundary && *boundary != 1 && *boundary != -1) throw ConfigError("boundary spin must be +1 or -1");
    std::vector<int> seen(geom.site_count(), 0);
    for (auto [s, v] : pinned) {
      if (s < 0 || s >= geom.site_count()) throw ConfigError("pinned site out of range");
      if (v != 1 && v != -1) throw ConfigError("pinned spin must be +1 or -1");
      if (seen[s] && seen[s] != v) throw ConfigError("conflicting pins on one site");
      seen[s] = v;
    }
    for (int s : observe_sites) {
      if (s < 0 || s >= geom.site_count()) throw ConfigError("observed site out of range");
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["geometry"] = geom.to_json();
    j["J"] = params.J;
    j["h"] = params.h;
    j["beta"] = params.beta;
    j["init"] = to_string(init);
    j["sweeps"] = sweeps;
    j["burn_in"] = burn_in;
    j["thin"] = thin;
    j["seed"] = seed;
    j["chain"] = chain;
    nlohmann::json pj = nlohmann::json::array();
    for (auto [s, v] : pinned) pj.push_back({s, v});
    j["pinned"] = pj;
    j["boundary"] = boundary ? nlohmann::json(*boundary) : nlohmann::json(nullptr);
    return j;
  }
};

struct ObservableTrace {
  std::vector<long> sweep;
  std::vector<double> m;
  std::vector<double> energy;
  std::vector<double> bad_fraction;
  std::vector<std::vector<int>> marginals;  // [observed site][sample]
  double acceptance = 0;
  SpinConfig final_state;

  std::size_t size() const { return m.size(); }

  std::string csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "sweep,m,H,bad_fraction\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
      os << sweep[i] << ',' << m[i] << ',' << energy[i] << ',' << (bad_fraction.empty() ? 0.0 : bad_fraction[i]) << '\n';
    }
    return os.str();
  }
  // whitespace-delimited, for gnuplot
  std::string dat() const {
    std::ostringstream os;
    os.precision(17);
    os << "# sweep m H bad_fraction\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
      os << sweep[i] << ' ' << m[i] << ' ' << energy[i] << ' ' << (bad_fraction.empty() ? 0.0 : bad_fraction[i]) << '\n';
    }
    return os.str();
  }
};

inline SpinConfig initial_state(const ChainSpec& spec) {
  const ModelGeometry& g = spec.geom;
  SpinConfig c = g.make_config(+1);
  switch (spec.init) {
    case InitKind::Plus: break;
    case InitKind::Minus: c.set_all(-1); break;
    case InitKind::Cell: c = reference_configs(g).cell; break;
    case InitKind::Random: {
      const CounterRng rng(spec.seed, spec.chain);
      for (int i = 0; i < g.site_count(); ++i) {
        c.set(static_cast<std::size_t>(i), rng.uniform(CounterRng::kInitSweep, static_cast<std::uint32_t>(i)) < 0.5 ? 1 : -1);
      }
      break;
    }
  }
  for (auto [s, v] : spec.pinned) c.set(static_cast<std::size_t>(s), v);
  return c;
}

namespace detail {

// Neighbour slots for the torus, or for the open box where -1 stands for the
// frozen outside.
inline std::vector<int> neighbour_slots(const ModelGeometry& g, bool open_box) {
  const int n = g.site_count();
  std::vector<int> slots(4 * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Site s = g.site(i);
    for (int k = 0; k < 4; ++k) slots[4 * i + k] = g.neighbors(i)[k];
    if (open_box) {
      if (s.t1 == g.width() - 1) slots[4 * i + 0] = -1;
      if (s.t1 == 0) slots[4 * i + 1] = -1;
      if (s.t2 == g.height() - 1) slots[4 * i + 2] = -1;
      if (s.t2 == 0) slots[4 * i + 3] = -1;
    }
  }
  return slots;
}

}  // namespace detail

// Energy in open-box mode: bonds inside the box plus every bond from a box
// site to the frozen outside, and the field on box sites.
inline double box_energy(const ModelGeometry& g, const ModelParams& p, const SpinConfig& c, int outside) {
  const auto slots = detail::neighbour_slots(g, true);
  double bonds = 0, field = 0;
  for (int i = 0; i < g.site_count(); ++i) {
    const int s = c[static_cast<std::size_t>(i)];
    for (int k : {0, 2}) {
      const int u = slots[4 * i + k];
      bonds += s * (u < 0 ? outside : c[static_cast<std::size_t>(u)]);
    }
    for (int k : {1, 3}) {
      if (slots[4 * i + k] < 0) bonds += s * outside;
    }
    field += g.field_sign(i) * s;
  }
  return -p.J * bonds - p.h * field;
}

inline ObservableTrace run_chain(const ChainSpec& spec) {
  spec.validate();
  const ModelGeometry& g = spec.geom;
  const ModelParams& p = spec.params;
  const int n = g.site_count();
  const bool open_box = spec.boundary.has_value();
  const int outside = open_box ? *spec.boundary : 0;
  const auto slots = detail::neighbour_slots(g, open_box);

  SpinConfig start = initial_state(spec);
  std::vector<int> spin(n);
  for (int i = 0; i < n; ++i) spin[i] = start[static_cast<std::size_t>(i)];
  std::vector<char> frozen(n, 0);
  for (auto [s, v] : spec.pinned) frozen[s] = 1;

  // acceptance probability for dH = 2 J sigma nsum + 2 h f sigma,
  // nsum in {-4, ..., 4}, f sigma = +-1
  std::array<double, 18> accept{};
  for (int ns = -4; ns <= 4; ++ns) {
    for (int fs : {-1, 1}) {
      const double dh = 2 * p.J * ns + 2 * p.h * fs;
      accept[(ns + 4) * 2 + (fs + 1) / 2] = dh <= 0 ? 1.0 : std::exp(-p.beta * dh);
    }
  }

  auto total_energy = [&] {
    double bonds = 0, field = 0;
    for (int i = 0; i < n; ++i) {
      const int r = slots[4 * i + 0], u = slots[4 * i + 2];
      bonds += spin[i] * ((r < 0 ? outside : spin[r]) + (u < 0 ? outside : spin[u]));
      if (slots[4 * i + 1] < 0) bonds += spin[i] * outside;
      if (slots[4 * i + 3] < 0) bonds += spin[i] * outside;
      field += g.field_sign(i) * spin[i];
    }
    return -p.J * bonds - p.h * field;
  };

  const CounterRng rng(spec.seed, spec.chain);
  ObservableTrace tr;
  tr.marginals.assign(spec.observe_sites.size(), {});
  const long samples = (spec.sweeps - spec.burn_in) / spec.thin;
  tr.sweep.reserve(samples);
  tr.m.reserve(samples);
  tr.energy.reserve(samples);
  long mag = 0;
  for (int i = 0; i < n; ++i) mag += spin[i];
  double h_now = total_energy();
  std::uint64_t accepted = 0, proposed = 0;
  SpinConfig snapshot = g.make_config(+1);

  for (long sw = 1; sw <= spec.sweeps; ++sw) {
    for (int i = 0; i < n; ++i) {
      if (frozen[i]) continue;
      int ns = 0;
      for (int k = 0; k < 4; ++k) {
        const int u = slots[4 * i + k];
        ns += u < 0 ? outside : spin[u];
      }
      const int s = spin[i];
      const int nsig = ns * s;
      const int fs = g.field_sign(i) * s;
      ++proposed;
      const double a = accept[(nsig + 4) * 2 + (fs + 1) / 2];
      if (a >= 1.0 || rng.uniform(static_cast<std::uint64_t>(sw), static_cast<std::uint32_t>(i)) < a) {
        spin[i] = -s;
        mag -= 2 * s;
        h_now += 2 * p.J * nsig + 2 * p.h * fs;
        ++accepted;
      }
    }
    if (sw > spec.burn_in && (sw - spec.burn_in) % spec.thin == 0) {
      tr.sweep.push_back(sw);
      tr.m.push_back(static_cast<double>(mag) / n);
      tr.energy.push_back(h_now);
      if (spec.record_bad_fraction) {
        for (int i = 0; i < n; ++i) snapshot.set(static_cast<std::size_t>(i), spin[i]);
        tr.bad_fraction.push_back(bad_block_fraction(g, snapshot));
      }
      for (std::size_t k = 0; k < spec.observe_sites.size(); ++k) tr.marginals[k].push_back(spin[spec.observe_sites[k]]);
    }
    // re-anchor the running energy against accumulated rounding
    if (sw % 1024 == 0) h_now = total_energy();
  }
  tr.acceptance = proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
  tr.final_state = g.make_config(+1);
  for (int i = 0; i < n; ++i) tr.final_state.set(static_cast<std::size_t>(i), spin[i]);
  return tr;
}

// Runs independent chains in parallel; results come back in input order.
inline std::vector<ObservableTrace> run_chains(const std::vector<ChainSpec>& specs) {
  std::vector<ObservableTrace> out(specs.size());
  parallel_chunks(static_cast<int>(specs.size()), [&](int k) { out[k] = run_chain(specs[k]); });
  return out;
}

// Fraction of samples in which a recorded site equals `value`, with error.
inline SeriesStats marginal_stats(const std::vector<int>& samples, int value) {
  std::vector<double> x(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) x[i] = samples[i] == value ? 1.0 : 0.0;
  return series_stats(x);
}

struct ConditionalEstimate {
  double p_plus = 0;   // mu+(sigma(s) = +1)
  double se_plus = 0;
  double p_minus = 0;  // mu-(sigma(s) = -1)
  double se_minus = 0;
  double tau_plus = 0.5;
  double tau_minus = 0.5;
};

// mu+/- = mu( . | sigma(t) = +-1 ), by chains with sigma(t) pinned. Each
// chain starts in the phase of its pin unless the base spec asks for a
// random start.
inline ConditionalEstimate conditional_measures(const ModelGeometry& g, const ModelParams& p, Site s, Site t,
                                                const ChainSpec& base) {
  const int is = g.index(s), it = g.index(t);
  if (is == it) throw ConfigError("conditional measures need distinct sites s and t");
  std::vector<ChainSpec> specs;
  for (int sign : {+1, -1}) {
    ChainSpec c = base;
    c.geom = g;
    c.params = p;
    c.pinned = base.pinned;
    c.pinned.emplace_back(it, sign);
    c.observe_sites = {is};
    c.chain = base.chain + (sign > 0 ? 0 : 1);
    if (base.init != InitKind::Random) c.init = sign > 0 ? InitKind::Plus : InitKind::Minus;
    specs.push_back(std::move(c));
  }
  const auto traces = run_chains(specs);
  const auto sp = marginal_stats(traces[0].marginals[0], +1);
  const auto sm = marginal_stats(traces[1].marginals[0], -1);
  return {sp.mean, sp.std_error, sm.mean, sm.std_error, sp.tau_int, sm.tau_int};
}

struct ScanPoint {
  double beta = 0;
  double h = 0;
};

struct ScanRow {
  double beta = 0;
  double h = 0;
  InitKind init = InitKind::Plus;
  std::uint64_t seed = 0;
  std::uint32_t chain = 0;
  SeriesStats m;
  SeriesStats energy;
  double mean_abs_m = 0;
  double mean_bad_fraction = 0;
  double acceptance = 0;
  // shared by the rows of one (beta, h) point
  double dip_ratio = 1;
  bool bimodal = false;
  double max_init_z = 0;  // largest |<m>_a - <m>_b| / combined error over init pairs
};

struct ScanResult {
  std::vector<ScanRow> rows;
  nlohmann::json manifest;

  std::string csv() const {
    std::ostringstream os;
    os.precision(12);
    os << "beta,h,init,seed,chain,mean_m,se_m,tau_m,mean_abs_m,mean_H,se_H,mean_bad_fraction,acceptance,dip_ratio,"
          "bimodal,max_init_z\n";
    for (const auto& r : rows) {
      os << r.beta << ',' << r.h << ',' << to_string(r.init) << ',' << r.seed << ',' << r.chain << ',' << r.m.mean << ','
         << r.m.std_error << ',' << r.m.tau_int << ',' << r.mean_abs_m << ',' << r.energy.mean << ',' << r.energy.std_error
         << ',' << r.mean_bad_fraction << ',' << r.acceptance << ',' << r.dip_ratio << ',' << (r.bimodal ? 1 : 0) << ','
         << r.max_init_z << '\n';
    }
    return os.str();
  }
};

// 64-bit FNV-1a, used to fingerprint the effective scan configuration.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline ScanResult coexistence_scan(const ModelGeometry& g, const std::vector<ScanPoint>& grid, const ChainSpec& base,
                                   const std::vector<InitKind>& inits = {InitKind::Plus, InitKind::Minus,
                                                                         InitKind::Random}) {
  std::vector<ChainSpec> specs;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (std::size_t a = 0; a < inits.size(); ++a) {
      ChainSpec c = base;
      c.geom = g;
      c.params.beta = grid[k].beta;
      c.params.h = grid[k].h;
      c.init = inits[a];
      c.chain = static_cast<std::uint32_t>(base.chain + k * inits.size() + a);
      specs.push_back(std::move(c));
    }
  }
  const auto traces = run_chains(specs);
  ScanResult out;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::vector<double> pooled;
    std::vector<ScanRow> rows;
    for (std::size_t a = 0; a < inits.size(); ++a) {
      const auto& tr = traces[k * inits.size() + a];
      const auto& sp = specs[k * inits.size() + a];
      ScanRow r;
      r.beta = grid[k].beta;
      r.h = grid[k].h;
      r.init = inits[a];
      r.seed = sp.seed;
      r.chain = sp.chain;
      r.m = series_stats(tr.m);
      r.energy = series_stats(tr.energy);
      double abs_sum = 0, bad_sum = 0;
      for (double v : tr.m) abs_sum += std::abs(v);
      for (double v : tr.bad_fraction) bad_sum += v;
      r.mean_abs_m = tr.m.empty() ? 0 : abs_sum / static_cast<double>(tr.m.size());
      r.mean_bad_fraction = tr.bad_fraction.empty() ? 0 : bad_sum / static_cast<double>(tr.bad_fraction.size());
      r.acceptance = tr.acceptance;
      pooled.insert(pooled.end(), tr.m.begin(), tr.m.end());
      rows.push_back(r);
    }
    const auto bm = bimodality(pooled);
    double zmax = 0;
    for (std::size_t a = 0; a < rows.size(); ++a) {
      for (std::size_t b = a + 1; b < rows.size(); ++b) {
        const double se = std::hypot(rows[a].m.std_error, rows[b].m.std_error);
        const double d = std::abs(rows[a].m.mean - rows[b].m.mean);
        zmax = std::max(zmax, se > 0 ? d / se : (d > 0 ? INFINITY : 0.0));
      }
    }
    for (auto& r : rows) {
      r.dip_ratio = bm.dip_ratio;
      r.bimodal = bm.bimodal;
      r.max_init_z = zmax;
      out.rows.push_back(r);
    }
  }
  nlohmann::json grid_j = nlohmann::json::array();
  for (auto pt : grid) grid_j.push_back({{"beta", pt.beta}, {"h", pt.h}});
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : specs) seeds.push_back({{"seed", s.seed}, {"chain", s.chain}, {"init", to_string(s.init)}});
  nlohmann::json cfg = {{"base", base.to_json()}, {"geometry", g.to_json()}, {"grid", grid_j}};
  out.manifest = {{"config", cfg}, {"chains", seeds}, {"spec_hash", fnv1a(cfg.dump())}};
  return out;
}

}  // namespace cellboard
