#pragma once

#include <algorithm>
#include <cmath>

#include "cellboard/errors.hpp"
#include "cellboard/geometry.hpp"

namespace cellboard {

struct ModelParams {
  double J = 1.0;
  double h = 0.0;
  double beta = 0.0;

  void validate() const {
    if (!(J > 0)) throw ConfigError("coupling J must be positive");
    if (!(h >= 0)) throw ConfigError("field magnitude h must be non-negative");
    if (!(beta >= 0)) throw ConfigError("inverse temperature beta must be non-negative");
  }
};

// H = -J * bond_sum - h * field_sum, with bond_sum over the 2 W H directed
// bonds (right and up from every site) and field_sum = sum_s sign(s) sigma(s).
// Keeping the two integers separate makes energy identities exact.
struct EnergyTerms {
  long bond_sum = 0;
  long field_sum = 0;

  double energy(double J, double h) const { return -J * static_cast<double>(bond_sum) - h * static_cast<double>(field_sum); }
  double energy(const ModelParams& p) const { return energy(p.J, p.h); }
  // -beta H
  double log_weight(const ModelParams& p) const { return -p.beta * energy(p); }

  friend bool operator==(const EnergyTerms&, const EnergyTerms&) = default;
  EnergyTerms operator-(const EnergyTerms& o) const { return {bond_sum - o.bond_sum, field_sum - o.field_sum}; }
  EnergyTerms operator*(long k) const { return {bond_sum * k, field_sum * k}; }
};

inline EnergyTerms energy_terms(const ModelGeometry& g, const SpinConfig& c) {
  g.check_dims(c);
  EnergyTerms t;
  for (int i = 0; i < g.site_count(); ++i) {
    const int s = c[i];
    t.bond_sum += s * (c[g.right(i)] + c[g.up(i)]);
    t.field_sum += g.field_sign(i) * s;
  }
  return t;
}

inline double energy(const ModelGeometry& g, const ModelParams& p, const SpinConfig& c) {
  return energy_terms(g, c).energy(p);
}

// Change of energy when the spin at `site` is flipped.
inline double energy_delta_flip(const ModelGeometry& g, const ModelParams& p, const SpinConfig& c, int site) {
  const int s = c[site];
  int nsum = 0;
  for (int u : g.neighbors(site)) nsum += c[u];
  return 2.0 * p.J * s * nsum + 2.0 * p.h * g.field_sign(site) * s;
}

inline bool relative_close(double a, double b, double rel, double abs_floor = 0.0) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) <= rel * scale + abs_floor;
}

}  // namespace cellboard
