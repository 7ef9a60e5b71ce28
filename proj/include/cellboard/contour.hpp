#pragma once

// Local perturbations sigma^V, their Peierls boundaries, the energy cost of
// a contour, the field sums along runs, and the exhaustive Peierls-condition
// sweep over all subsets V of the 2 x 2 cell torus.

#include <bit>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cellboard/energy.hpp"
#include "cellboard/errors.hpp"
#include "cellboard/geometry.hpp"
#include "cellboard/model.hpp"
#include "cellboard/parallel.hpp"
#include "cellboard/report.hpp"

namespace cellboard {

inline constexpr int kMaxSweepSites = 24;

inline void check_sites(const ModelGeometry& g, std::span<const int> V) {
  for (int s : V) {
    if (s < 0 || s >= g.site_count()) throw ConfigError("perturbation site out of range");
  }
}

// sigma^V: flips exactly the sites of V (duplicates flip once).
inline SpinConfig perturb(const ModelGeometry& g, const SpinConfig& c, std::span<const int> V) {
  g.check_dims(c);
  check_sites(g, V);
  std::vector<char> in(g.site_count(), 0);
  for (int s : V) in[s] = 1;
  SpinConfig out = c;
  for (int i = 0; i < g.site_count(); ++i) {
    if (in[i]) out.flip(static_cast<std::size_t>(i));
  }
  return out;
}

struct PeierlsBoundary {
  int horizontal_edges = 0;  // cut bonds along axis 1
  int vertical_edges = 0;    // cut bonds along axis 2
  std::vector<std::pair<int, int>> edges;  // (inside, outside), one per directed bond

  int size() const { return horizontal_edges + vertical_edges; }
};

// Cut bonds under the directed right/up convention, so a 2-wide torus counts
// its doubled wrap bonds twice.
inline PeierlsBoundary boundary(const ModelGeometry& g, std::span<const int> V) {
  check_sites(g, V);
  std::vector<char> in(g.site_count(), 0);
  for (int s : V) in[s] = 1;
  PeierlsBoundary b;
  for (int i = 0; i < g.site_count(); ++i) {
    for (int axis = 1; axis <= 2; ++axis) {
      const int j = axis == 1 ? g.right(i) : g.up(i);
      if (in[i] == in[j]) continue;
      (axis == 1 ? b.horizontal_edges : b.vertical_edges)++;
      b.edges.emplace_back(in[i] ? i : j, in[i] ? j : i);
    }
  }
  return b;
}

struct ContourEnergy {
  double delta_h = 0;     // H(sigma+^V) - H(sigma+), by full recomputation
  double closed_form = 0; // 2 J |dV| + 2 sum_{s in V} h(s)
};

inline ContourEnergy contour_energy_identity(const ModelGeometry& g, const ModelParams& p, std::span<const int> V) {
  const SpinConfig plus = g.make_config(+1);
  ContourEnergy out;
  out.delta_h = energy(g, p, perturb(g, plus, V)) - energy(g, p, plus);
  std::vector<char> in(g.site_count(), 0);
  for (int s : V) in[s] = 1;
  long fsum = 0;
  for (int i = 0; i < g.site_count(); ++i) {
    if (in[i]) fsum += g.field_sign(i);
  }
  out.closed_form = 2 * p.J * boundary(g, V).size() + 2 * p.h * static_cast<double>(fsum);
  return out;
}

struct Run {
  int axis = 1;
  std::vector<int> sites;
  bool closed = false;  // the run wraps the whole line
  long field_sum = 0;   // sum of field signs
};

// Maximal runs of V along rows (axis 1) or columns (axis 2), with wrap.
inline std::vector<Run> runs(const ModelGeometry& g, std::span<const int> V, int axis) {
  check_sites(g, V);
  std::vector<char> in(g.site_count(), 0);
  for (int s : V) in[s] = 1;
  const int len = axis == 1 ? g.width() : g.height();
  const int lines = axis == 1 ? g.height() : g.width();
  auto at = [&](int line, int k) { return axis == 1 ? g.index({k, line}) : g.index({line, k}); };
  std::vector<Run> out;
  for (int line = 0; line < lines; ++line) {
    int start = -1;
    for (int k = 0; k < len; ++k) {
      if (!in[at(line, k)]) {
        start = k;
        break;
      }
    }
    if (start < 0) {
      Run r{axis, {}, true, 0};
      for (int k = 0; k < len; ++k) {
        r.sites.push_back(at(line, k));
        r.field_sum += g.field_sign(at(line, k));
      }
      out.push_back(std::move(r));
      continue;
    }
    // walk once around the line starting just after an empty site
    Run cur{axis, {}, false, 0};
    for (int step = 1; step <= len; ++step) {
      const int s = at(line, (start + step) % len);
      if (in[s]) {
        cur.sites.push_back(s);
        cur.field_sum += g.field_sign(s);
      } else if (!cur.sites.empty()) {
        out.push_back(cur);
        cur = Run{axis, {}, false, 0};
      }
    }
    if (!cur.sites.empty()) out.push_back(cur);
  }
  return out;
}

// |sum_{s in S} h(s)| <= h L1 on every horizontal run and <= h L2 on every
// vertical run; closed runs sum to zero. For strips the field is constant
// along rows, so only vertical runs (bound h L) are constrained.
inline VerificationReport line_sum_bounds(const ModelGeometry& g, const ModelParams& p, std::span<const int> V) {
  Stopwatch sw;
  VerificationReport r;
  r.name = "line-sum-bounds";
  r.inputs = {{"geometry", g.to_json()}, {"h", p.h}, {"V", std::vector<int>(V.begin(), V.end())}};
  r.relation = "<=";
  r.tolerance = 0;
  bool ok = true;
  double worst = -std::numeric_limits<double>::infinity();
  int checked = 0;
  for (int axis = 1; axis <= 2; ++axis) {
    if (g.is_strip() && axis == 1) continue;
    const double bound = p.h * g.period(axis);
    for (const auto& run : runs(g, V, axis)) {
      ++checked;
      const double s = std::abs(p.h * static_cast<double>(run.field_sum));
      if (run.closed && run.field_sum != 0) ok = false;
      if (s > bound) ok = false;
      worst = std::max(worst, s - bound);
    }
  }
  r.lhs = checked ? worst : 0;
  r.rhs = 0;
  r.verdict = ok ? Verdict::Pass : Verdict::Fail;
  r.detail = {{"runs", checked}, {"max_excess", r.lhs}};
  r.seconds = sw.seconds();
  return r;
}

struct LemmaSweep {
  double min_delta = std::numeric_limits<double>::infinity();
  std::uint64_t argmin = 0;
  double min_slack = std::numeric_limits<double>::infinity();  // min of dH - c_P |dV|
  std::uint64_t argmin_slack = 0;
  int min_boundary = std::numeric_limits<int>::max();
  std::uint64_t subsets = 0;
};

// Every V with 0 < |V| < n on the given torus, by Gray code over the
// membership mask with O(1) updates of |dV| and of the field sum over V.
inline LemmaSweep sweep_perturbations(const ModelGeometry& g, const ModelParams& p, double peierls_c,
                                      int max_sites = kMaxSweepSites) {
  const int n = g.site_count();
  if (n > max_sites) {
    throw GuardError("perturbation sweep over " + std::to_string(n) + " sites exceeds the guard of " +
                     std::to_string(max_sites));
  }
  std::vector<int> slots(4 * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 4; ++k) slots[4 * i + k] = g.neighbors(i)[k];
  }
  const int chunk_bits = std::min(n, 6);
  const int low = n - chunk_bits;
  const int chunks = 1 << chunk_bits;
  std::vector<LemmaSweep> parts(chunks);
  parallel_chunks(chunks, [&](int c) {
    LemmaSweep& part = parts[c];
    std::uint64_t mask = static_cast<std::uint64_t>(c) << low;
    long cut = 0, fsum = 0;
    auto member = [&](int i) { return (mask >> i) & 1U; };
    auto toggle = [&](int i) {
      const unsigned was = member(i);
      for (int k = 0; k < 4; ++k) cut += member(slots[4 * i + k]) == was ? 1 : -1;
      fsum += was ? -g.field_sign(i) : g.field_sign(i);
      mask ^= std::uint64_t{1} << i;
    };
    // build the chunk's starting state from scratch
    {
      const std::uint64_t start = mask;
      mask = 0;
      for (int i = 0; i < n; ++i) {
        if ((start >> i) & 1U) toggle(i);
      }
    }
    const std::uint64_t full = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
    auto visit = [&] {
      if (mask == 0 || mask == full) return;
      ++part.subsets;
      const double dh = 2 * p.J * static_cast<double>(cut) + 2 * p.h * static_cast<double>(fsum);
      if (dh < part.min_delta) {
        part.min_delta = dh;
        part.argmin = mask;
      }
      const double slack = dh - peierls_c * static_cast<double>(cut);
      if (slack < part.min_slack) {
        part.min_slack = slack;
        part.argmin_slack = mask;
      }
      part.min_boundary = std::min<int>(part.min_boundary, static_cast<int>(cut));
    };
    visit();
    const std::uint64_t steps = std::uint64_t{1} << low;
    for (std::uint64_t k = 1; k < steps; ++k) {
      toggle(std::countr_zero(k));
      visit();
    }
  });
  LemmaSweep out;
  for (const auto& part : parts) {
    out.subsets += part.subsets;
    if (part.min_delta < out.min_delta) {
      out.min_delta = part.min_delta;
      out.argmin = part.argmin;
    }
    if (part.min_slack < out.min_slack) {
      out.min_slack = part.min_slack;
      out.argmin_slack = part.argmin_slack;
    }
    out.min_boundary = std::min(out.min_boundary, part.min_boundary);
  }
  return out;
}

inline std::vector<int> mask_sites(std::uint64_t mask) {
  std::vector<int> out;
  for (int i = 0; mask; ++i, mask >>= 1) {
    if (mask & 1U) out.push_back(i);
  }
  return out;
}

inline constexpr double kLemmaRelTol = 1e-12;

// Peierls condition on the 2 x 2 cell torus: for every nontrivial V,
// dH >= c_P |dV| and dH >= 4 c_P.
inline VerificationReport verify_lemma_hb(const ModelGeometry& g, const ModelParams& p, int max_sites = kMaxSweepSites) {
  Stopwatch sw;
  if (g.N() != 2) throw ConfigError("the Peierls sweep runs on the 2 x 2 cell torus (N = 2)");
  const TheoryConstants tc = theory_constants(g, p);
  VerificationReport r;
  r.name = "lemma-hb";
  r.inputs = {{"geometry", g.to_json()}, {"J", p.J}, {"h", p.h}, {"theory", tc.to_json()}};
  r.relation = ">=";
  r.tolerance = kLemmaRelTol;
  if (!tc.peierls_holds()) {
    r.verdict = Verdict::Vacuous;
    r.detail["reason"] = "h is not below the threshold; the Peierls constant is not positive";
    r.seconds = sw.seconds();
    return r;
  }
  const LemmaSweep s = sweep_perturbations(g, p, tc.peierls_c, max_sites);
  const double bound4 = 4 * tc.peierls_c;
  const double scale = std::max({1.0, std::abs(s.min_delta), bound4});
  const bool per_contour = s.min_slack >= -kLemmaRelTol * scale;
  const bool four = s.min_delta >= bound4 - kLemmaRelTol * scale;
  const bool b4 = s.min_boundary >= 4;
  r.lhs = s.min_delta;
  r.rhs = bound4;
  r.verdict = per_contour && four && b4 ? Verdict::Pass : Verdict::Fail;
  r.detail = {{"min_delta", s.min_delta},
              {"argmin_V", mask_sites(s.argmin)},
              {"c_P", tc.peierls_c},
              {"bound_4cP", bound4},
              {"per_contour_min_slack", s.min_slack},
              {"argmin_slack_V", mask_sites(s.argmin_slack)},
              {"min_boundary", s.min_boundary},
              {"subsets", s.subsets}};
  r.seconds = sw.seconds();
  return r;
}

// The block is sigma-bad when its restriction is not constant.
inline bool is_bad_block(const SpinConfig& c, const BlockFamily& family, int b) {
  const auto sites = family.block(b);
  const int first = c[static_cast<std::size_t>(sites[0])];
  for (int s : sites) {
    if (c[static_cast<std::size_t>(s)] != first) return true;
  }
  return false;
}

inline bool is_bad_block(const ModelGeometry& g, const SpinConfig& c, BlockCoord b) {
  g.check_dims(c);
  return is_bad_block(c, g.blocks(), g.block_index(b));
}

inline double bad_block_fraction(const ModelGeometry& g, const SpinConfig& c) {
  int bad = 0;
  for (int b = 0; b < g.block_count(); ++b) bad += is_bad_block(c, g.blocks(), b);
  return static_cast<double>(bad) / g.block_count();
}

}  // namespace cellboard
