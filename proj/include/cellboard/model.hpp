#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cellboard/energy.hpp"
#include "cellboard/enumerate.hpp"
#include "cellboard/geometry.hpp"
#include "json.hpp"

namespace cellboard {

inline constexpr double kDefaultCombinatorialC = 9.0;

struct TheoryConstants {
  double peierls_c = 0;  // c_P
  double threshold = 0;  // field below which sigma+/- are the ground states
  std::optional<double> beta0;       // phase-coexistence inverse temperature
  std::optional<double> beta_prime;  // validity range of the two-point bound
  double c_combinatorial = kDefaultCombinatorialC;

  bool peierls_holds() const { return peierls_c > 0; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["peierls_c"] = peierls_c;
    j["threshold"] = threshold;
    j["beta0"] = beta0 ? nlohmann::json(*beta0) : nlohmann::json(nullptr);
    j["beta_prime"] = beta_prime ? nlohmann::json(*beta_prime) : nlohmann::json(nullptr);
    j["c"] = c_combinatorial;
    return j;
  }
};

// Cell board: c_P = 2J - h L1 L2 / (L1 + L2), threshold 2J/L1 + 2J/L2,
// beta0 = 8 [(B1 B2 + 4) ln 2 + ln(c (c + 1))] / c_P.
// Strips: c_P = 2J - h L, threshold 2J/L; beta0 = k / c_P only when the
// strip constant k is supplied.
inline TheoryConstants theory_constants(const ModelGeometry& g, const ModelParams& p, double c = kDefaultCombinatorialC,
                                        std::optional<double> strip_k = std::nullopt) {
  TheoryConstants tc;
  tc.c_combinatorial = c;
  const double bb = g.block_size();
  if (g.is_strip()) {
    const double L = g.strip_height();
    tc.peierls_c = 2 * p.J - p.h * L;
    tc.threshold = 2 * p.J / L;
    if (tc.peierls_c > 0 && strip_k) tc.beta0 = *strip_k / tc.peierls_c;
  } else {
    const double L1 = g.L1();
    const double L2 = g.L2();
    tc.peierls_c = 2 * p.J - p.h * L1 * L2 / (L1 + L2);
    tc.threshold = 2 * p.J / L1 + 2 * p.J / L2;
    if (tc.peierls_c > 0) {
      tc.beta0 = 8 * ((bb + 4) * std::log(2.0) + std::log(c * (c + 1))) / tc.peierls_c;
      tc.beta_prime = 4 * ((bb + 2) * std::log(2.0) + 2 * std::log(c * (c + 1))) / tc.peierls_c;
    }
  }
  return tc;
}

// Right-hand side of the two-point bound: 2 c (c+1) 2^{B1B2/2} e^{-beta c_P / 8}
// for the cell board, 2 c (c+1) 2^{B1B2} e^{-beta c_P / 2} for strips, where
// B1 B2 = 2 L' is the strip block size.
inline double two_point_bound(const ModelGeometry& g, const TheoryConstants& tc, double beta) {
  const double c = tc.c_combinatorial;
  const double bb = g.block_size();
  if (g.is_strip()) return 2 * c * (c + 1) * std::pow(2.0, bb) * std::exp(-beta * tc.peierls_c / 2);
  return 2 * c * (c + 1) * std::pow(2.0, bb / 2) * std::exp(-beta * tc.peierls_c / 8);
}

struct ReferenceConfigs {
  SpinConfig plus;
  SpinConfig minus;
  SpinConfig cell;  // sigma_c: aligned with the field everywhere
};

inline ReferenceConfigs reference_configs(const ModelGeometry& g) {
  ReferenceConfigs r{g.make_config(+1), g.make_config(-1), g.make_config(-1)};
  for (int i = 0; i < g.site_count(); ++i) r.cell.set(static_cast<std::size_t>(i), g.field_sign(i));
  return r;
}

enum class GroundStateClass { PlusMinus, Cell, Degenerate, Other };

inline std::string to_string(GroundStateClass c) {
  switch (c) {
    case GroundStateClass::PlusMinus: return "plus_minus";
    case GroundStateClass::Cell: return "cell";
    case GroundStateClass::Degenerate: return "degenerate";
    case GroundStateClass::Other: return "other";
  }
  return "other";
}

struct GroundStateResult {
  GroundStateClass label = GroundStateClass::Other;
  double min_energy = 0;
  std::uint64_t minimizer_count = 0;
  std::vector<std::uint64_t> minimizers;  // first few minimizer masks
  bool contains_plus_minus = false;
  bool contains_cell = false;
};

inline constexpr int kMaxGroundStateSites = 24;

// Exhaustive minimisation of H over all configurations of a small torus
// (normally the 2 x 2 cell torus). Degenerate means both the constant
// configurations and sigma_c are minimisers.
inline GroundStateResult classify_ground_states(const ModelGeometry& g, const ModelParams& p) {
  if (g.site_count() > kMaxGroundStateSites) {
    throw GuardError("ground-state classification is limited to " + std::to_string(kMaxGroundStateSites) + " sites");
  }
  const EnergyHistogram hist = energy_histogram(g, {}, kMaxGroundStateSites);
  double emin = std::numeric_limits<double>::infinity();
  hist.for_each([&](EnergyTerms t, std::uint64_t) { emin = std::min(emin, t.energy(p)); });
  const double tol = 1e-12 * std::max(1.0, std::abs(emin));

  GroundStateResult out;
  out.min_energy = emin;
  const auto plan = plan_enumeration(g, {}, kMaxGroundStateSites);
  struct Worker {
    double emin, tol;
    ModelParams p;
    std::uint64_t count = 0;
    std::vector<std::uint64_t> masks;
    void operator()(std::uint64_t mask, const EnergyTerms& t) {
      if (t.energy(p) <= emin + tol) {
        ++count;
        if (masks.size() < 64) masks.push_back(mask);
      }
    }
  };
  auto workers = enumerate_chunks(g, plan, [&](int) { return Worker{emin, tol, p, 0, {}}; });
  for (auto& w : workers) {
    out.minimizer_count += w.count;
    for (auto m : w.masks) {
      if (out.minimizers.size() < 64) out.minimizers.push_back(m);
    }
  }
  const auto ref = reference_configs(g);
  auto is_min = [&](const SpinConfig& c) { return energy(g, p, c) <= emin + tol; };
  const bool pm = is_min(ref.plus) && is_min(ref.minus);
  const bool cell = is_min(ref.cell);
  out.contains_plus_minus = pm;
  out.contains_cell = cell;
  if (pm && cell) {
    out.label = GroundStateClass::Degenerate;
  } else if (pm && out.minimizer_count == 2) {
    out.label = GroundStateClass::PlusMinus;
  } else if (cell && out.minimizer_count == 1) {
    out.label = GroundStateClass::Cell;
  } else {
    out.label = GroundStateClass::Other;
  }
  return out;
}

}  // namespace cellboard
