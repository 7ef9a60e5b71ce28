#pragma once

// Gray-code enumeration of torus configurations with O(1) incremental
// energy updates. Energies are carried as the integer pair
// (bond_sum, field_sum), so partition functions reduce to an exact
// density-of-states histogram followed by one log-sum-exp per beta.

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "cellboard/energy.hpp"
#include "cellboard/errors.hpp"
#include "cellboard/geometry.hpp"
#include "cellboard/parallel.hpp"

namespace cellboard {

inline constexpr int kMaxFreeSpins = 28;

// (site index, spin)
using Pin = std::pair<int, int>;

inline double log_sum_exp(std::span<const double> xs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : xs) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - hi);
  return hi + std::log(s);
}

// Exact counts of configurations per (bond_sum, field_sum).
class EnergyHistogram {
 public:
  EnergyHistogram() = default;
  explicit EnergyHistogram(int sites)
      : n_(sites), nb_(4 * sites + 1), nf_(2 * sites + 1), counts_(static_cast<std::size_t>(nb_) * nf_, 0) {}

  void add(long bond_sum, long field_sum, std::uint64_t k = 1) {
    counts_[static_cast<std::size_t>(bond_sum + 2 * n_) * nf_ + (field_sum + n_)] += k;
  }

  void merge(const EnergyHistogram& o) {
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += o.counts_[i];
  }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
  }
  bool empty() const { return total() == 0; }

  template <class Fn>  // fn(EnergyTerms, count)
  void for_each(Fn&& fn) const {
    for (int b = 0; b < nb_; ++b) {
      for (int f = 0; f < nf_; ++f) {
        const auto c = counts_[static_cast<std::size_t>(b) * nf_ + f];
        if (c) fn(EnergyTerms{b - 2L * n_, f - static_cast<long>(n_)}, c);
      }
    }
  }

  // log sum_sigma exp(-beta H(sigma)); -inf for an empty histogram.
  double log_sum(const ModelParams& p) const {
    std::vector<double> terms;
    for_each([&](EnergyTerms t, std::uint64_t c) { terms.push_back(std::log(static_cast<double>(c)) + t.log_weight(p)); });
    return log_sum_exp(terms);
  }

  // Largest -beta H over populated cells.
  double max_log_weight(const ModelParams& p) const {
    double hi = -std::numeric_limits<double>::infinity();
    for_each([&](EnergyTerms t, std::uint64_t) { hi = std::max(hi, t.log_weight(p)); });
    return hi;
  }

  // Gibbs mean of H.
  double mean_energy(const ModelParams& p) const {
    const double lz = log_sum(p);
    double acc = 0.0;
    for_each([&](EnergyTerms t, std::uint64_t c) {
      acc += static_cast<double>(c) * std::exp(t.log_weight(p) - lz) * t.energy(p);
    });
    return acc;
  }

  friend bool operator==(const EnergyHistogram&, const EnergyHistogram&) = default;

 private:
  int n_ = 0;
  int nb_ = 0;
  int nf_ = 0;
  std::vector<std::uint64_t> counts_;
};

// Precomputed neighbour slots and field signs for mask arithmetic.
class MaskLattice {
 public:
  explicit MaskLattice(const ModelGeometry& g) : n_(g.site_count()), field_(g.field_signs()) {
    if (n_ > 64) throw GuardError("mask enumeration supports at most 64 sites");
    slots_.resize(4 * static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) {
      for (int k = 0; k < 4; ++k) slots_[4 * i + k] = g.neighbors(i)[k];
    }
    rights_.resize(n_);
    ups_.resize(n_);
    for (int i = 0; i < n_; ++i) {
      rights_[i] = g.right(i);
      ups_[i] = g.up(i);
    }
  }

  int sites() const { return n_; }

  static int spin(std::uint64_t mask, int i) { return (mask >> i) & 1U ? +1 : -1; }

  EnergyTerms terms(std::uint64_t mask) const {
    EnergyTerms t;
    for (int i = 0; i < n_; ++i) {
      const int s = spin(mask, i);
      t.bond_sum += s * (spin(mask, rights_[i]) + spin(mask, ups_[i]));
      t.field_sum += field_[i] * s;
    }
    return t;
  }

  // Applies the flip of site i to (mask, terms).
  void flip(std::uint64_t& mask, EnergyTerms& t, int i) const {
    const int s = spin(mask, i);
    const int* sl = &slots_[4 * static_cast<std::size_t>(i)];
    const int nsum = spin(mask, sl[0]) + spin(mask, sl[1]) + spin(mask, sl[2]) + spin(mask, sl[3]);
    t.bond_sum -= 2L * s * nsum;
    t.field_sum -= 2L * field_[i] * s;
    mask ^= std::uint64_t{1} << i;
  }

 private:
  int n_;
  std::vector<int> field_;
  std::vector<int> slots_;
  std::vector<int> rights_;
  std::vector<int> ups_;
};

struct EnumerationPlan {
  std::uint64_t base_mask = 0;
  std::vector<int> free_sites;
  int chunk_bits = 0;
};

// Validates pins, resolves the free sites and checks the free-spin guard.
inline EnumerationPlan plan_enumeration(const ModelGeometry& g, std::span<const Pin> pins,
                                        int max_free = kMaxFreeSpins) {
  const int n = g.site_count();
  if (n > 64) throw GuardError("exact enumeration supports tori of at most 64 sites");
  std::vector<int> pinned(n, 0);
  EnumerationPlan plan;
  for (auto [site, spin] : pins) {
    if (site < 0 || site >= n) throw ConfigError("pinned site out of range");
    if (spin != 1 && spin != -1) throw ConfigError("pinned spin must be +1 or -1");
    if (pinned[site] != 0 && pinned[site] != spin) throw ConfigError("conflicting pins on one site");
    pinned[site] = spin;
    if (spin > 0) plan.base_mask |= std::uint64_t{1} << site;
  }
  for (int i = 0; i < n; ++i) {
    if (pinned[i] == 0) plan.free_sites.push_back(i);
  }
  if (static_cast<int>(plan.free_sites.size()) > max_free) {
    throw GuardError("enumeration of " + std::to_string(plan.free_sites.size()) + " free spins exceeds the guard of " +
                     std::to_string(max_free));
  }
  plan.chunk_bits = std::min<int>(static_cast<int>(plan.free_sites.size()), 6);
  return plan;
}

// Visits every configuration consistent with the plan. `make_worker(chunk)`
// returns a callable worker(mask, terms); workers are returned in chunk
// order for a deterministic reduction.
template <class MakeWorker>
auto enumerate_chunks(const ModelGeometry& g, const EnumerationPlan& plan, MakeWorker&& make_worker) {
  using Worker = decltype(make_worker(0));
  const MaskLattice lat(g);
  const int nfree = static_cast<int>(plan.free_sites.size());
  const int low = nfree - plan.chunk_bits;
  const int chunks = 1 << plan.chunk_bits;
  std::vector<Worker> workers;
  workers.reserve(chunks);
  for (int c = 0; c < chunks; ++c) workers.push_back(make_worker(c));
  parallel_chunks(chunks, [&](int c) {
    Worker& w = workers[c];
    std::uint64_t mask = plan.base_mask;
    for (int b = 0; b < plan.chunk_bits; ++b) {
      if ((c >> b) & 1) mask |= std::uint64_t{1} << plan.free_sites[low + b];
    }
    EnergyTerms t = lat.terms(mask);
    w(mask, t);
    const std::uint64_t steps = std::uint64_t{1} << low;
    for (std::uint64_t i = 1; i < steps; ++i) {
      lat.flip(mask, t, plan.free_sites[std::countr_zero(i)]);
      w(mask, t);
    }
  });
  return workers;
}

// Histogram of all configurations consistent with `pins`.
inline EnergyHistogram energy_histogram(const ModelGeometry& g, std::span<const Pin> pins = {},
                                        int max_free = kMaxFreeSpins) {
  const auto plan = plan_enumeration(g, pins, max_free);
  struct Worker {
    EnergyHistogram hist;
    void operator()(std::uint64_t, const EnergyTerms& t) { hist.add(t.bond_sum, t.field_sum); }
  };
  auto workers = enumerate_chunks(g, plan, [&](int) { return Worker{EnergyHistogram(g.site_count())}; });
  EnergyHistogram out(g.site_count());
  for (auto& w : workers) out.merge(w.hist);
  return out;
}

// Histogram restricted to configurations accepted by pred(mask).
template <class Pred>
EnergyHistogram event_histogram(const ModelGeometry& g, std::span<const Pin> pins, Pred pred,
                                int max_free = kMaxFreeSpins) {
  const auto plan = plan_enumeration(g, pins, max_free);
  struct Worker {
    EnergyHistogram hist;
    Pred pred;
    void operator()(std::uint64_t mask, const EnergyTerms& t) {
      if (pred(mask)) hist.add(t.bond_sum, t.field_sum);
    }
  };
  auto workers = enumerate_chunks(g, plan, [&](int) { return Worker{EnergyHistogram(g.site_count()), pred}; });
  EnergyHistogram out(g.site_count());
  for (auto& w : workers) out.merge(w.hist);
  return out;
}

}  // namespace cellboard
