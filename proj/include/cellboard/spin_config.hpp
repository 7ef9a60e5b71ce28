#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cellboard {

struct Site {
  int t1 = 0;
  int t2 = 0;

  friend bool operator==(const Site&, const Site&) = default;
};

// Bit-packed +-1 configuration on a W x H torus. A set bit is spin +1.
// Layout is row-major: site (t1, t2) lives at bit t2 * W + t1.
class SpinConfig {
 public:
  SpinConfig() = default;
  SpinConfig(int width, int height, int fill = +1)
      : width_(width), height_(height), words_(word_count(width * height), 0) {
    if (fill > 0) set_all(+1);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return static_cast<std::size_t>(width_) * height_; }

  std::size_t index(Site s) const {
    return static_cast<std::size_t>(wrap(s.t2, height_)) * width_ + wrap(s.t1, width_);
  }

  int operator[](std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U ? +1 : -1; }
  int at(Site s) const { return (*this)[index(s)]; }

  void set(std::size_t i, int spin) {
    const std::uint64_t bit = std::uint64_t{1} << (i & 63);
    if (spin > 0) {
      words_[i >> 6] |= bit;
    } else {
      words_[i >> 6] &= ~bit;
    }
  }
  void set(Site s, int spin) { set(index(s), spin); }
  void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  void set_all(int spin) {
    for (auto& w : words_) w = spin > 0 ? ~std::uint64_t{0} : 0;
    clear_tail();
  }

  // -sigma for every site.
  SpinConfig flipped() const {
    SpinConfig out = *this;
    for (auto& w : out.words_) w = ~w;
    out.clear_tail();
    return out;
  }

  long magnetization_sum() const {
    long plus = 0;
    for (auto w : words_) plus += std::popcount(w);
    return 2 * plus - static_cast<long>(size());
  }

  // Low 64 sites as a mask; only meaningful for tori with at most 64 sites.
  std::uint64_t mask() const { return words_.empty() ? 0 : words_[0]; }
  static SpinConfig from_mask(int width, int height, std::uint64_t mask) {
    if (width * height > 64) throw std::out_of_range("from_mask: more than 64 sites");
    SpinConfig c(width, height, -1);
    c.words_[0] = mask;
    c.clear_tail();
    return c;
  }

  const std::vector<std::uint64_t>& words() const { return words_; }

  friend bool operator==(const SpinConfig&, const SpinConfig&) = default;

  static int wrap(int v, int n) {
    const int r = v % n;
    return r < 0 ? r + n : r;
  }

 private:
  static std::size_t word_count(int n) { return (static_cast<std::size_t>(n) + 63) / 64; }
  void clear_tail() {
    const std::size_t n = size();
    if (n % 64 != 0 && !words_.empty()) words_.back() &= (std::uint64_t{1} << (n % 64)) - 1;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace cellboard
