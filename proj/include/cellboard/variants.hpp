#pragma once

// The 1 x 1 cell board against the antiferromagnet in a uniform field, and
// the verification battery for the alternating-strips model.

#include <cmath>
#include <random>
#include <vector>

#include "cellboard/contour.hpp"
#include "cellboard/energy.hpp"
#include "cellboard/errors.hpp"
#include "cellboard/exact.hpp"
#include "cellboard/geometry.hpp"
#include "cellboard/report.hpp"

namespace cellboard {

struct AntiferroParams {
  double J_a = -1;
  double h_a = 0;

  void validate() const {
    if (!(J_a < 0)) throw ConfigError("antiferromagnetic coupling J_a must be negative");
    if (!std::isfinite(h_a)) throw ConfigError("h_a must be finite");
  }
};

inline void require_even_dims(const ModelGeometry& g) {
  if (g.width() % 2 || g.height() % 2) throw ConfigError("the staggering map needs even torus dimensions");
}

// Flips the spins on the odd sublattice t1 + t2 odd.
inline SpinConfig psi_transform(const ModelGeometry& g, const SpinConfig& c) {
  require_even_dims(g);
  g.check_dims(c);
  SpinConfig out = c;
  for (int i = 0; i < g.site_count(); ++i) {
    const Site s = g.site(i);
    if ((s.t1 + s.t2) % 2) out.set(static_cast<std::size_t>(i), -c[static_cast<std::size_t>(i)]);
  }
  return out;
}

// H_a = -J_a sum_<ts> sigma(t) sigma(s) - h_a sum_s sigma(s).
inline double antiferro_energy(const ModelGeometry& g, const AntiferroParams& a, const SpinConfig& c) {
  a.validate();
  require_even_dims(g);
  const EnergyTerms t = energy_terms(g, c);
  return -a.J_a * static_cast<double>(t.bond_sum) - a.h_a * static_cast<double>(c.magnetization_sum());
}

inline constexpr int kMaxCorollarySpins = 16;
inline constexpr double kCorollaryAbsTol = 1e-12;

// H_a(Psi sigma; -J, h) = H(sigma; J, h) for every sigma of a 1 x 1 cell board.
inline VerificationReport verify_corollary1(const ModelGeometry& g, double J, double h,
                                            int max_spins = kMaxCorollarySpins) {
  Stopwatch sw;
  if (g.is_strip() || g.L1() != 1 || g.L2() != 1) throw ConfigError("the antiferromagnet map needs 1 x 1 cells");
  require_even_dims(g);
  if (g.site_count() > max_spins) {
    throw GuardError("exhaustive check over " + std::to_string(g.site_count()) + " spins exceeds the limit of " +
                     std::to_string(max_spins));
  }
  const ModelParams p{J, h, 0};
  p.validate();
  const AntiferroParams a{-J, h};
  double worst = 0;
  std::uint64_t worst_mask = 0;
  double emin_cb = INFINITY, emin_af = INFINITY;
  const std::uint64_t total = std::uint64_t{1} << g.site_count();
  for (std::uint64_t m = 0; m < total; ++m) {
    const SpinConfig c = SpinConfig::from_mask(g.width(), g.height(), m);
    const double hc = energy(g, p, c);
    const double ha = antiferro_energy(g, a, psi_transform(g, c));
    emin_cb = std::min(emin_cb, hc);
    emin_af = std::min(emin_af, ha);
    if (std::abs(ha - hc) > worst) {
      worst = std::abs(ha - hc);
      worst_mask = m;
    }
  }
  VerificationReport r;
  r.name = "corollary1";
  r.inputs = {{"geometry", g.to_json()}, {"J", J}, {"h", h}, {"J_a", a.J_a}, {"h_a", a.h_a}, {"kind", "antiferro"}};
  r.relation = "==";
  r.lhs = worst;
  r.rhs = 0;
  r.tolerance = kCorollaryAbsTol;
  r.verdict = worst < kCorollaryAbsTol ? Verdict::Pass : Verdict::Fail;
  r.detail = {{"configurations", total},
              {"max_abs_difference", worst},
              {"worst_mask", worst_mask},
              {"ground_energy_cellboard", emin_cb},
              {"ground_energy_antiferro", emin_af}};
  r.seconds = sw.seconds();
  return r;
}

struct StripBatteryOptions {
  int chessboard_trials = 10;
  std::uint64_t seed = 1;
  int max_free = kMaxFreeSpins;
};

// RP on every plane, chessboard, the bad-block bound, the Peierls analogue
// on the 2 x 2L torus and the +/- symmetry via the Q2 line.
inline VerificationReport verify_strip_model(const ModelGeometry& g, const ModelParams& p,
                                             const StripBatteryOptions& opt = {}) {
  Stopwatch sw;
  if (!g.is_strip()) throw ConfigError("the strip battery needs a strip geometry");
  p.validate();
  const TheoryConstants tc = theory_constants(g, p);
  const auto e = ExactEnsemble::enumerate(g, p, {}, opt.max_free);
  std::vector<VerificationReport> parts;
  for (const auto& pl : g.planes()) parts.push_back(verify_rp(e, pl, opt.seed));
  std::mt19937_64 rng(opt.seed);
  for (int k = 0; k < opt.chessboard_trials; ++k) {
    const auto as = random_assignments(g, rng);
    parts.push_back(verify_chessboard(e, as));
  }
  parts.push_back(verify_prop2(e));
  parts.push_back(verify_lemma_hb(g.sub_torus_2x2(), p));
  parts.push_back(verify_symmetry(e, 2, 200, opt.seed));

  bool fail = false, vacuous = false;
  nlohmann::json sub = nlohmann::json::array();
  for (const auto& r : parts) {
    fail = fail || r.verdict == Verdict::Fail;
    vacuous = vacuous || r.verdict == Verdict::Vacuous;
    sub.push_back({{"name", r.name}, {"verdict", to_string(r.verdict)}, {"lhs", r.lhs}, {"rhs", r.rhs}});
  }
  VerificationReport r;
  r.name = "strip";
  r.inputs = e.to_json();
  r.inputs["kind"] = "strip";
  r.inputs["theory"] = tc.to_json();
  // headline: the bad-block bound
  const auto& prop2 = parts[parts.size() - 3];
  r.relation = "<=";
  r.lhs = prop2.lhs;
  r.rhs = prop2.rhs;
  r.tolerance = kBoundRelTol;
  r.verdict = fail ? Verdict::Fail : (vacuous ? Verdict::Vacuous : Verdict::Pass);
  r.detail = {{"checks", sub}, {"count", parts.size()}};
  r.seconds = sw.seconds();
  return r;
}

}  // namespace cellboard
