#pragma once

// Means and standard errors of correlated Monte Carlo series, with the
// integrated autocorrelation time from the self-consistent window
// W >= c tau_int(W).

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace cellboard {

struct SeriesStats {
  double mean = 0;
  double variance = 0;  // of a single sample
  double tau_int = 0.5;
  int window = 0;
  double std_error = 0;
  std::size_t n = 0;
};

inline SeriesStats series_stats(std::span<const double> x, double c = 6.0) {
  SeriesStats s;
  s.n = x.size();
  if (x.empty()) return s;
  double sum = 0;
  for (double v : x) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  double var = 0;
  for (double v : x) var += (v - s.mean) * (v - s.mean);
  var /= static_cast<double>(s.n);
  s.variance = var;
  if (s.n < 2 || var <= 0) {
    s.tau_int = 0.5;
    s.std_error = 0;
    return s;
  }
  const std::size_t max_lag = std::min<std::size_t>(s.n - 1, std::max<std::size_t>(1, s.n / 2));
  // unnormalised autocovariance sums; by FFT for long series
  std::vector<double> acov;
  if (s.n > 4096) {
    std::size_t len = 1;
    while (len < 2 * s.n) len <<= 1;
    std::vector<double> pad(len, 0.0);
    for (std::size_t i = 0; i < s.n; ++i) pad[i] = x[i] - s.mean;
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, pad);
    for (auto& z : spec) z = std::norm(z);
    fft.inv(acov, spec);
  }
  double tau = 0.5;
  std::size_t w = 1;
  for (; w <= max_lag; ++w) {
    double acc = 0;
    if (!acov.empty()) {
      acc = acov[w];
    } else {
      for (std::size_t i = 0; i + w < s.n; ++i) acc += (x[i] - s.mean) * (x[i + w] - s.mean);
    }
    const double rho = acc / (static_cast<double>(s.n - w) * var);
    tau += rho;
    if (static_cast<double>(w) >= c * tau) break;
  }
  s.tau_int = std::max(0.5, tau);
  s.window = static_cast<int>(std::min(w, max_lag));
  s.std_error = std::sqrt(var * 2 * s.tau_int / static_cast<double>(s.n));
  return s;
}

// 21 bins on [-1, 1]. Dip ratio = lowest bin between the highest bin with
// m < 0 and the highest bin with m > 0, over the smaller of those two peaks.
// A ratio below 0.5 counts as bimodal.
struct Bimodality {
  std::vector<double> histogram;
  double dip_ratio = 1;
  bool bimodal = false;
};

inline Bimodality bimodality(std::span<const double> m, int bins = 21) {
  Bimodality b;
  b.histogram.assign(bins, 0.0);
  for (double v : m) {
    int k = static_cast<int>(std::floor((v + 1) / 2 * bins));
    b.histogram[std::clamp(k, 0, bins - 1)] += 1;
  }
  const int mid = bins / 2;
  const auto left = std::max_element(b.histogram.begin(), b.histogram.begin() + mid);
  const auto right = std::max_element(b.histogram.begin() + mid + 1, b.histogram.end());
  const double peak = std::min(*left, *right);
  if (peak <= 0) return b;
  const double valley = *std::min_element(left, right + 1);
  b.dip_ratio = valley / peak;
  b.bimodal = b.dip_ratio < 0.5;
  return b;
}

}  // namespace cellboard
