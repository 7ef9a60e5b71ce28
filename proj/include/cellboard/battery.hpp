#pragma once

// The full acceptance battery. Each check returns one report that folds in
// its sub-checks; the acceptance binary and `run-all` both call these.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cellboard/contour.hpp"
#include "cellboard/exact.hpp"
#include "cellboard/mc.hpp"
#include "cellboard/model.hpp"
#include "cellboard/report.hpp"
#include "cellboard/transfer.hpp"
#include "cellboard/variants.hpp"

namespace cellboard {

struct BatteryOptions {
  bool slow = false;
  std::uint64_t seed = 1;
  long mc_sweeps = 1000000;         // small-torus MC against exact values
  long coexistence_sweeps = 20000;  // 16 x 16 runs
};

namespace battery {

inline nlohmann::json summary(const VerificationReport& r) {
  nlohmann::json j = {{"name", r.name}, {"verdict", to_string(r.verdict)}, {"lhs", r.lhs}, {"rhs", r.rhs}};
  if (r.inputs.contains("geometry")) j["geometry"] = r.inputs["geometry"];
  if (r.inputs.contains("beta")) j["beta"] = r.inputs["beta"];
  if (r.inputs.contains("h")) j["h"] = r.inputs["h"];
  return j;
}

// Fails if any part fails. Vacuous parts are reported but do not count
// towards the verdict; the caller decides whether they are allowed.
inline VerificationReport fold(std::string name, const std::vector<VerificationReport>& parts, const Stopwatch& sw) {
  VerificationReport r;
  r.name = std::move(name);
  r.relation = "all";
  bool fail = false;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& p : parts) {
    fail = fail || p.verdict == Verdict::Fail;
    list.push_back(summary(p));
  }
  r.verdict = fail || parts.empty() ? Verdict::Fail : Verdict::Pass;
  r.lhs = static_cast<double>(parts.size());
  r.rhs = static_cast<double>(parts.size());
  r.detail["checks"] = list;
  r.seconds = sw.seconds();
  return r;
}

inline VerificationReport check(std::string name, bool ok, double lhs, double rhs, std::string relation, double tol,
                                nlohmann::json inputs = nlohmann::json::object()) {
  VerificationReport r;
  r.name = std::move(name);
  r.inputs = std::move(inputs);
  r.relation = std::move(relation);
  r.lhs = lhs;
  r.rhs = rhs;
  r.tolerance = tol;
  r.verdict = ok ? Verdict::Pass : Verdict::Fail;
  return r;
}

}  // namespace battery

inline VerificationReport check_log_z(const BatteryOptions&) {
  Stopwatch sw;
  const ModelParams p{1, 1, 1};
  std::vector<VerificationReport> parts;
  double worst = 0;
  for (auto g : {ModelGeometry::cell_board(1, 1, 2), ModelGeometry::cell_board(1, 1, 4), ModelGeometry::cell_board(3, 2, 2),
                 ModelGeometry::strip(1, 4)}) {
    const double en = log_partition_enumerate(g, p);
    const double tm = log_partition_transfer(g, p);
    const double rel = std::abs(en - tm) / std::abs(en);
    worst = std::max(worst, rel);
    parts.push_back(battery::check("log-z", rel <= 1e-10, en, tm, "==", 1e-10,
                                   {{"geometry", g.to_json()}, {"beta", p.beta}, {"relative_difference", rel}}));
  }
  auto r = battery::fold("log Z: enumeration vs transfer matrix", parts, sw);
  r.relation = "<=";
  r.lhs = worst;
  r.rhs = 1e-10;
  r.tolerance = 1e-10;
  return r;
}

inline VerificationReport check_rp(const BatteryOptions& opt) {
  Stopwatch sw;
  std::vector<VerificationReport> parts;
  for (auto g : {ModelGeometry::cell_board(1, 1, 2), ModelGeometry::cell_board(2, 1, 2)}) {
    for (double beta : {0.0, 0.5, 1.0, 2.0, 5.0}) {
      const auto e = ExactEnsemble::enumerate(g, {1, 1, beta});
      for (const auto& pl : g.planes()) parts.push_back(verify_rp(e, pl, opt.seed));
    }
  }
  return battery::fold("reflection positivity on every plane", parts, sw);
}

inline VerificationReport check_chessboard(const BatteryOptions& opt) {
  Stopwatch sw;
  std::vector<VerificationReport> parts;
  std::mt19937_64 rng(opt.seed);
  double worst = -INFINITY;  // largest log(lhs / rhs)
  for (auto g : {ModelGeometry::cell_board(1, 1, 2), ModelGeometry::cell_board(1, 1, 4)}) {
    for (double beta : {0.5, 2.0}) {
      const auto e = ExactEnsemble::enumerate(g, {1, 1, beta});
      for (int k = 0; k < 50; ++k) {
        const auto as = random_assignments(g, rng);
        auto r = verify_chessboard(e, as);
        worst = std::max(worst, r.detail["log_lhs"].get<double>() - r.detail["log_rhs"].get<double>());
        parts.push_back(std::move(r));
      }
    }
  }
  auto r = battery::fold("chessboard estimate, random block events", parts, sw);
  r.detail["max_log_ratio"] = worst;
  return r;
}

inline VerificationReport check_prop2(const BatteryOptions&) {
  Stopwatch sw;
  std::vector<VerificationReport> parts;
  const auto g = ModelGeometry::cell_board(1, 1, 2);
  for (double beta : {1.0, 2.0, 4.0}) {
    auto r = verify_prop2(ExactEnsemble::enumerate(g, {1, 1, beta}));
    const auto fam = r.detail["families"][0];
    if (fam["bad_patterns"].get<std::uint64_t>() != 14) r.verdict = Verdict::Fail;
    parts.push_back(std::move(r));
  }
  auto r = battery::fold("bad-block bound z(R) <= 2^{B1B2} exp(-beta c_P)", parts, sw);
  r.detail["rhs_at_beta_2"] = parts[1].rhs;
  return r;
}

inline VerificationReport check_lemma_per(const BatteryOptions& opt) {
  Stopwatch sw;
  std::vector<VerificationReport> parts;
  const ModelParams p{1, 0.7, 0};
  for (auto g : {ModelGeometry::cell_board(1, 1, 4), ModelGeometry::cell_board(2, 1, 4)}) {
    const std::uint64_t n = std::uint64_t{1} << g.block_size();
    for (std::uint64_t pat = 0; pat < n; ++pat) parts.push_back(verify_lemma_per(g, p, pat));
  }
  const auto g = ModelGeometry::cell_board(3, 2, 4);
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::uint64_t> pick(0, (std::uint64_t{1} << g.block_size()) - 1);
  for (int k = 0; k < 100; ++k) parts.push_back(verify_lemma_per(g, p, pick(rng)));
  return battery::fold("tiled energy equals copies of the 2 x 2 cell torus energy", parts, sw);
}

inline VerificationReport check_lemma_hb(const BatteryOptions&) {
  Stopwatch sw;
  std::vector<VerificationReport> parts;
  {
    auto r = verify_lemma_hb(ModelGeometry::cell_board(1, 1, 2), {1, 1, 0});
    if (r.lhs != 6 || r.rhs != 6) r.verdict = Verdict::Fail;
    parts.push_back(std::move(r));
  }
  // the 24-site torus (2^24 - 2 subsets) is cheap with Gray-code updates
  for (auto [L1, L2] : {std::pair{2, 1}, std::pair{2, 2}, std::pair{3, 2}}) {
    const auto g = ModelGeometry::cell_board(L1, L2, 2);
    const double thr = theory_constants(g, {1, 0, 0}).threshold;
    for (double frac : {0.5, 0.9}) {
      auto r = verify_lemma_hb(g, {1, frac * thr, 0});
      if (r.verdict == Verdict::Vacuous) r.verdict = Verdict::Fail;
      parts.push_back(std::move(r));
    }
  }
  return battery::fold("Peierls bound on the 2 x 2 cell torus", parts, sw);
}

inline VerificationReport check_ground_states(const BatteryOptions&) {
  Stopwatch sw;
  std::vector<VerificationReport> parts;
  for (auto [L1, L2] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{2, 2}}) {
    const auto g = ModelGeometry::cell_board(L1, L2, 2);
    const double thr = theory_constants(g, {1, 0, 0}).threshold;
    const std::pair<double, GroundStateClass> cases[] = {
        {0.5, GroundStateClass::PlusMinus}, {1.0, GroundStateClass::Degenerate}, {1.5, GroundStateClass::Cell}};
    for (auto [frac, want] : cases) {
      const auto gs = classify_ground_states(g, {1, frac * thr, 0});
      auto r = battery::check("ground-states", gs.label == want, gs.min_energy, gs.min_energy, "==", 0,
                              {{"geometry", g.to_json()}, {"h", frac * thr}});
      r.detail = {{"label", to_string(gs.label)}, {"expected", to_string(want)}, {"minimizers", gs.minimizer_count}};
      parts.push_back(std::move(r));
    }
  }
  return battery::fold("ground states below, at and above threshold", parts, sw);
}

inline VerificationReport check_corollary1(const BatteryOptions&) {
  auto r = verify_corollary1(ModelGeometry::cell_board(1, 1, 4), 1, 1);
  r.name = "antiferromagnet energy under the staggering map";
  return r;
}

inline VerificationReport check_symmetry(const BatteryOptions& opt) {
  Stopwatch sw;
  std::vector<VerificationReport> parts;
  for (auto g : {ModelGeometry::cell_board(1, 1, 2), ModelGeometry::cell_board(1, 1, 4), ModelGeometry::strip(1, 4)}) {
    for (double beta : {0.5, 1.0, 2.0}) parts.push_back(verify_symmetry(ExactEnsemble::enumerate(g, {1, 1, beta}), 2, 200, opt.seed));
  }
  return battery::fold("mu(all +) = mu(all -) = (1 - mu(R)) / 2", parts, sw);
}

// <m> and <H> by plain summation over all configurations.
inline std::pair<double, double> exact_m_and_h(const ModelGeometry& g, const ModelParams& p) {
  const auto e = ExactEnsemble::enumerate(g, p);
  double m = 0, h = 0;
  const std::uint64_t total = std::uint64_t{1} << g.site_count();
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    const SpinConfig c = SpinConfig::from_mask(g.width(), g.height(), mask);
    const double en = energy(g, p, c);
    const double w = std::exp(-p.beta * en - e.log_z());
    m += w * static_cast<double>(c.magnetization_sum()) / g.site_count();
    h += w * en;
  }
  return {m, h};
}

inline VerificationReport check_mc_exact(const BatteryOptions& opt) {
  Stopwatch sw;
  const auto g = ModelGeometry::cell_board(1, 2, 2);  // 2 x 4
  const ModelParams p{1, 1, 1};
  const auto [m_exact, h_exact] = exact_m_and_h(g, p);
  ChainSpec s;
  s.geom = g;
  s.params = p;
  s.init = InitKind::Random;
  s.sweeps = opt.mc_sweeps;
  s.burn_in = std::min<long>(10000, opt.mc_sweeps / 10);
  s.seed = opt.seed;
  s.record_bad_fraction = false;
  const auto t = run_chain(s);
  const auto sm = series_stats(t.m);
  const auto sh = series_stats(t.energy);
  const double zm = sm.std_error > 0 ? std::abs(sm.mean - m_exact) / sm.std_error : 0;
  const double zh = sh.std_error > 0 ? std::abs(sh.mean - h_exact) / sh.std_error : 0;
  std::vector<VerificationReport> parts;
  auto rm = battery::check("mean-m", zm <= 3, sm.mean, m_exact, "within 3 SE", 3, {{"geometry", g.to_json()}, {"beta", 1}});
  rm.detail = {{"std_error", sm.std_error}, {"tau_int", sm.tau_int}, {"z", zm}};
  auto rh = battery::check("mean-H", zh <= 3, sh.mean, h_exact, "within 3 SE", 3, {{"geometry", g.to_json()}, {"beta", 1}});
  rh.detail = {{"std_error", sh.std_error}, {"tau_int", sh.tau_int}, {"z", zh}};
  parts.push_back(rm);
  parts.push_back(rh);
  auto r = battery::fold("Monte Carlo means vs exact on 2 x 4", parts, sw);
  r.inputs = s.to_json();
  r.detail["mean_m"] = rm.detail;
  r.detail["mean_H"] = rh.detail;
  r.detail["acceptance"] = t.acceptance;
  return r;
}

inline VerificationReport check_coexistence(const BatteryOptions& opt) {
  Stopwatch sw;
  std::vector<VerificationReport> parts;
  ChainSpec base;
  base.sweeps = opt.coexistence_sweeps;
  base.burn_in = opt.coexistence_sweeps / 10;
  base.seed = opt.seed;
  base.record_bad_fraction = false;
  for (auto g : {ModelGeometry::cell_board(1, 1, 16), ModelGeometry::strip(1, 16)}) {
    const ModelParams p{1, 1, 2};
    const Site s{0, 0};
    const Site t{g.width() / 2, 0};
    const auto est = conditional_measures(g, p, s, t, base);
    const double zp = est.se_plus > 0 ? (est.p_plus - 0.5) / est.se_plus : (est.p_plus > 0.5 ? INFINITY : 0);
    const double zm = est.se_minus > 0 ? (est.p_minus - 0.5) / est.se_minus : (est.p_minus > 0.5 ? INFINITY : 0);
    auto r = battery::check("pinned phases", zp >= 5 && zm >= 5, std::min(zp, zm), 5, ">=", 0,
                            {{"geometry", g.to_json()}, {"beta", p.beta}, {"h", p.h}});
    r.detail = {{"mu_plus_s_plus", est.p_plus}, {"se_plus", est.se_plus},    {"mu_minus_s_minus", est.p_minus},
                {"se_minus", est.se_minus}, {"z_plus", zp},                 {"z_minus", zm}};
    parts.push_back(std::move(r));

    const auto scan = coexistence_scan(g, {{0.1, 1.0}}, base);
    const double z = scan.rows.front().max_init_z;
    auto rs = battery::check("high temperature", z <= 3, z, 3, "<=", 0, {{"geometry", g.to_json()}, {"beta", 0.1}});
    nlohmann::json means = nlohmann::json::array();
    for (const auto& row : scan.rows) means.push_back({{"init", to_string(row.init)}, {"mean_m", row.m.mean}, {"se", row.m.std_error}});
    rs.detail = {{"means", means}};
    parts.push_back(std::move(rs));
  }
  auto r = battery::fold("phase coexistence on 16 x 16, none at beta = 0.1", parts, sw);
  r.detail["sweeps"] = opt.coexistence_sweeps;
  return r;
}

inline VerificationReport check_two_point(const BatteryOptions&) {
  Stopwatch sw;
  const auto g = ModelGeometry::cell_board(1, 1, 4);
  const ModelParams p{1, 1, 0};
  const Site s{0, 0}, t{g.width() / 2, 0};
  const auto e0 = ExactEnsemble::enumerate(g, p);
  std::vector<double> probs;
  nlohmann::json table = nlohmann::json::array();
  for (double beta : {0.0, 1.0, 2.0, 4.0}) {
    const double v = two_point_probability(e0.with_beta(beta), s, t);
    probs.push_back(v);
    table.push_back({{"beta", beta}, {"probability", v}});
  }
  std::vector<VerificationReport> parts;
  for (std::size_t k = 1; k < probs.size(); ++k) {
    parts.push_back(battery::check("non-increasing", probs[k] <= probs[k - 1] * (1 + 1e-12), probs[k], probs[k - 1], "<=",
                                   1e-12, {{"geometry", g.to_json()}, {"beta", table[k]["beta"]}}));
  }
  const auto tc = theory_constants(g, {1, 1, 4});
  const double bound = two_point_bound(g, tc, 4);
  parts.push_back(battery::check("bound at beta = 4", probs.back() <= bound, probs.back(), bound, "<=", 0,
                                 {{"geometry", g.to_json()}, {"beta", 4}}));
  auto r = battery::fold("two-point probability decays and obeys its bound", parts, sw);
  r.detail["table"] = table;
  r.detail["bound_beta_4"] = bound;
  return r;
}

struct BatteryEntry {
  std::string id;
  std::function<VerificationReport(const BatteryOptions&)> run;
};

inline std::vector<BatteryEntry> battery_entries() {
  return {{"log-z", check_log_z},
          {"rp", check_rp},
          {"chessboard", check_chessboard},
          {"prop2", check_prop2},
          {"lemma-per", check_lemma_per},
          {"lemma-hb", check_lemma_hb},
          {"ground-states", check_ground_states},
          {"corollary1", check_corollary1},
          {"symmetry", check_symmetry},
          {"mc-exact", check_mc_exact},
          {"coexistence", check_coexistence},
          {"two-point", check_two_point}};
}

}  // namespace cellboard
