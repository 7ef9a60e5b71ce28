#pragma once

// log Z by a line-by-line transfer matrix, used as an oracle independent of
// exact enumeration. The torus is cut into lines along the shorter axis; the
// trace over the first line's state is taken explicitly, and each following
// line is inserted one site at a time so that memory stays at 2^height
// doubles. Cost is 4^height * W * H.

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "cellboard/energy.hpp"
#include "cellboard/enumerate.hpp"
#include "cellboard/geometry.hpp"
#include "cellboard/parallel.hpp"

namespace cellboard {

inline constexpr int kMaxTransferHeight = 20;

inline double log_partition_transfer(const ModelGeometry& g, const ModelParams& p,
                                     int max_height = kMaxTransferHeight) {
  const bool transpose = g.height() > g.width();
  const int lines = transpose ? g.height() : g.width();
  const int len = transpose ? g.width() : g.height();
  if (len > max_height) {
    throw GuardError("transfer-matrix height " + std::to_string(len) + " exceeds the guard of " +
                     std::to_string(max_height));
  }
  auto field = [&](int x, int y) { return transpose ? g.field_sign(Site{y, x}) : g.field_sign(Site{x, y}); };

  // exp(beta (J * bonds + h * f * s)) for bonds in [-3, 3] and f*s = +-1.
  std::array<double, 14> factor{};
  for (int b = -3; b <= 3; ++b) {
    for (int fs : {-1, 1}) factor[(b + 3) * 2 + (fs + 1) / 2] = std::exp(p.beta * (p.J * b + p.h * fs));
  }
  auto fac = [&](int bonds, int fs) { return factor[(bonds + 3) * 2 + (fs + 1) / 2]; };

  const std::size_t states = std::size_t{1} << len;
  auto bit = [](std::size_t s, int y) { return (s >> y) & 1U ? +1 : -1; };

  std::vector<double> log_z_by_start(states);
  const int chunks = static_cast<int>(std::min<std::size_t>(states, 64));
  parallel_chunks(chunks, [&](int chunk) {
    std::vector<double> v(states), next(states);
    for (std::size_t s0 = chunk; s0 < states; s0 += chunks) {
      // First line: internal bonds and field.
      double e0 = 0;
      for (int y = 0; y < len; ++y) {
        e0 += p.J * bit(s0, y) * bit(s0, (y + 1) % len) + p.h * field(0, y) * bit(s0, y);
      }
      double log_scale = p.beta * e0;
      std::fill(v.begin(), v.end(), 0.0);
      v[s0] = 1.0;
      for (int x = 1; x < lines; ++x) {
        for (int y = 0; y < len; ++y) {
          std::fill(next.begin(), next.end(), 0.0);
          const int f = field(x, y);
          for (std::size_t s = 0; s < states; ++s) {
            const double w = v[s];
            if (w == 0.0) continue;
            const int old = bit(s, y);
            for (int sn : {-1, 1}) {
              int bonds = old * sn;
              if (y > 0) bonds += sn * bit(s, y - 1);
              if (y == len - 1) bonds += sn * (len == 1 ? sn : bit(s, 0));
              const std::size_t t = sn > 0 ? (s | (std::size_t{1} << y)) : (s & ~(std::size_t{1} << y));
              next[t] += w * fac(bonds, f * sn);
            }
          }
          v.swap(next);
          double hi = 0;
          for (double w : v) hi = std::max(hi, w);
          for (double& w : v) w /= hi;
          log_scale += std::log(hi);
        }
      }
      // Close the horizontal wrap between the last line and the first.
      std::vector<double> terms;
      for (std::size_t s = 0; s < states; ++s) {
        if (v[s] == 0.0) continue;
        int overlap = 0;
        for (int y = 0; y < len; ++y) overlap += bit(s, y) * bit(s0, y);
        terms.push_back(std::log(v[s]) + p.beta * p.J * overlap);
      }
      log_z_by_start[s0] = log_scale + log_sum_exp(terms);
    }
  });
  return log_sum_exp(log_z_by_start);
}

}  // namespace cellboard
