#pragma once

// Torus geometry for the cell-board and alternating-strip field patterns:
// the field sign, the reflection lines that cut the torus into blocks, the
// block Lambda and its translates, double blocks, and the propagation maps
// that copy a block configuration to every translate by reflections.
//
// Coordinates. Sites use canonical torus coordinates (t1, t2) in
// [0, W) x [0, H). The block Lambda is the minimal rectangle cut out by the
// reflection lines that contains the origin; along axis i it spans
// t_i in [-(p_i + 1) / 2, (p_i - 1) / 2] (integer division), where p_i is the
// block period (L1 / L2 for the cell board, 1 / L for strips). Negative
// coordinates wrap, so block (0, 0) always contains site (0, 0).
//
// Propagation parity. The translate Lambda + (n p1, m p2) receives the block
// configuration reflected through the block's own midline along axis 1 when
// n is odd and along axis 2 when m is odd. Parity is taken on the block index
// n, m rather than on the raw coordinate: for even p_i the raw coordinate
// n p_i is always even, and only block-index parity makes neighbouring copies
// mirror images of each other across the shared reflection line.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cellboard/errors.hpp"
#include "cellboard/spin_config.hpp"
#include "json.hpp"

namespace cellboard {

enum class FieldKind { CellBoard, Strip };

inline std::string to_string(FieldKind k) { return k == FieldKind::CellBoard ? "cellboard" : "strip"; }

struct BlockCoord {
  int n = 0;
  int m = 0;
  friend bool operator==(const BlockCoord&, const BlockCoord&) = default;
};

// A reflection of the torus. The line sits at coordinate twice_offset / 2
// along `axis` (1 or 2); on the torus it is paired with the antipodal line.
struct ReflectionPlane {
  int axis = 1;
  int twice_offset = 0;

  bool through_sites() const { return twice_offset % 2 == 0; }
  double offset() const { return twice_offset / 2.0; }

  static ReflectionPlane at(int axis, double offset) {
    if (axis != 1 && axis != 2) throw ConfigError("reflection axis must be 1 or 2");
    const double twice = 2.0 * offset;
    const auto rounded = static_cast<long>(twice >= 0 ? twice + 0.5 : twice - 0.5);
    if (twice != static_cast<double>(rounded)) {
      throw ConfigError("reflection line is not aligned to the lattice");
    }
    return {axis, static_cast<int>(rounded)};
  }
};

// The four double-block families. (h, *) exist only for even p1, (v, *) only
// for even p2. Family 1 pairs blocks {2j, 2j + 1}; family 2 pairs
// {2j - 1, 2j}, i.e. Lambda together with Lambda shifted back by one period.
struct DoubleBlockKind {
  char orientation = 'h';  // 'h' or 'v'
  int family = 1;          // 1 or 2

  int axis() const { return orientation == 'h' ? 1 : 2; }
  std::string tag() const { return std::string(1, orientation) + std::to_string(family); }
  friend bool operator==(const DoubleBlockKind&, const DoubleBlockKind&) = default;

  static DoubleBlockKind parse(const std::string& s) {
    if (s.size() == 2 && (s[0] == 'h' || s[0] == 'v') && (s[1] == '1' || s[1] == '2')) {
      return {s[0], s[1] - '0'};
    }
    throw ConfigError("unknown double-block kind '" + s + "' (expected h1, h2, v1 or v2)");
  }
  static std::vector<DoubleBlockKind> all() { return {{'h', 1}, {'h', 2}, {'v', 1}, {'v', 2}}; }
};

// A family of congruent blocks covering the torus together with the
// propagation map from the reference block. sites[b * size + k] is the torus
// site that carries bit k of a reference-block pattern after propagation to
// block b. Local bit k = k2 * side1 + k1 indexes the reference rectangle.
struct BlockFamily {
  int count = 0;
  int side1 = 0;
  int side2 = 0;
  std::vector<int> sites;
  std::vector<Site> anchors;  // translation of each member's lower-left block

  int size() const { return side1 * side2; }
  std::span<const int> block(int b) const {
    return {sites.data() + static_cast<std::size_t>(b) * size(), static_cast<std::size_t>(size())};
  }
};

class ModelGeometry {
 public:
  static ModelGeometry cell_board(int L1, int L2, int N) {
    if (L1 <= 0 || L2 <= 0) throw ConfigError("cell sides L1, L2 must be positive");
    if (N < 2 || N % 2 != 0) throw ConfigError("cell-board torus scale N must be even and >= 2");
    return ModelGeometry(FieldKind::CellBoard, L1, L2, N);
  }

  static ModelGeometry strip(int L, int N) {
    if (L <= 0) throw ConfigError("strip height L must be positive");
    if (N < 4 || N % 4 != 0) throw ConfigError("strip torus scale N must be a multiple of 4");
    return ModelGeometry(FieldKind::Strip, 1, L, N);
  }

  FieldKind kind() const { return kind_; }
  bool is_strip() const { return kind_ == FieldKind::Strip; }
  // Block period along an axis: the cell side, or 1 / L for strips.
  int period(int axis) const { return axis == 1 ? p1_ : p2_; }
  int L1() const { return p1_; }
  int L2() const { return p2_; }
  int strip_height() const { return p2_; }
  int N() const { return n_; }
  int width() const { return w_; }
  int height() const { return h_; }
  int site_count() const { return w_ * h_; }

  // B_i: p_i for even p_i, p_i + 1 for odd p_i.
  int block_side(int axis) const {
    const int p = period(axis);
    return p % 2 == 0 ? p : p + 1;
  }
  int block_size() const { return block_side(1) * block_side(2); }
  int block_count() const { return n_ * n_; }

  int index(Site s) const { return SpinConfig::wrap(s.t2, h_) * w_ + SpinConfig::wrap(s.t1, w_); }
  Site site(int i) const { return {i % w_, i / w_}; }
  Site canonical(Site s) const { return {SpinConfig::wrap(s.t1, w_), SpinConfig::wrap(s.t2, h_)}; }

  int field_sign(Site s) const { return field_[index(s)]; }
  int field_sign(int i) const { return field_[i]; }
  const std::vector<int>& field_signs() const { return field_; }

  // Neighbour slots with torus multiplicity: right, left, up, down. On a
  // dimension of size 2 right and left coincide, which counts the doubled
  // wrap bond twice.
  int right(int i) const { return nbr_[4 * i + 0]; }
  int left(int i) const { return nbr_[4 * i + 1]; }
  int up(int i) const { return nbr_[4 * i + 2]; }
  int down(int i) const { return nbr_[4 * i + 3]; }
  std::span<const int, 4> neighbors(int i) const { return std::span<const int, 4>(nbr_.data() + 4 * i, 4); }

  SpinConfig make_config(int fill = +1) const { return SpinConfig(w_, h_, fill); }

  // ---- reflections --------------------------------------------------------

  // The distinct torus reflections whose lines pass through the middle of
  // the cells (or strips). Lines n and n + N/2 coincide on the torus, so each
  // axis contributes N/2 reflections.
  std::vector<ReflectionPlane> planes() const {
    std::vector<ReflectionPlane> out;
    for (int axis = 1; axis <= 2; ++axis) {
      const int p = period(axis);
      for (int n = 0; n < n_ / 2; ++n) out.push_back({axis, 2 * n * p + p - 1});
    }
    return out;
  }

  bool in_plane_set(const ReflectionPlane& pl) const {
    const int p = period(pl.axis);
    const int dim = pl.axis == 1 ? w_ : h_;
    const int c = SpinConfig::wrap(pl.twice_offset, dim);
    return SpinConfig::wrap(c + 1, 2 * p) == p;
  }

  // The midlines of Lambda, t_i = -1/2. Not in the plane set.
  static ReflectionPlane q_line(int axis) { return {axis, -1}; }

  Site reflect(Site s, const ReflectionPlane& pl) const {
    if (pl.axis == 1) return canonical({pl.twice_offset - s.t1, s.t2});
    return canonical({s.t1, pl.twice_offset - s.t2});
  }

  SpinConfig apply_reflection(const ReflectionPlane& pl, const SpinConfig& c) const {
    check_dims(c);
    SpinConfig out = make_config(-1);
    for (int i = 0; i < site_count(); ++i) out.set(index(reflect(site(i), pl)), c[i]);
    return out;
  }

  struct Halves {
    std::vector<int> left;         // all sites of the left half, plane lines included
    std::vector<int> plane_sites;  // subset of `left` lying on the reflection lines
  };

  // Left half of the torus for a reflection: the dim/2 lines following the
  // line at twice_offset / 2; for reflections through sites both fixed
  // lines belong to the half.
  Halves halves(const ReflectionPlane& pl) const {
    const int dim = pl.axis == 1 ? w_ : h_;
    const int other = pl.axis == 1 ? h_ : w_;
    const int c = SpinConfig::wrap(pl.twice_offset, 2 * dim);
    const bool sites = pl.through_sites();
    const int start = sites ? c / 2 : (c + 1) / 2;
    const int lines = sites ? dim / 2 + 1 : dim / 2;
    Halves out;
    for (int k = 0; k < lines; ++k) {
      const int coord = SpinConfig::wrap(start + k, dim);
      const bool on_line = sites && (k == 0 || k == dim / 2);
      for (int o = 0; o < other; ++o) {
        const Site s = pl.axis == 1 ? Site{coord, o} : Site{o, coord};
        out.left.push_back(index(s));
        if (on_line) out.plane_sites.push_back(index(s));
      }
    }
    return out;
  }

  // ---- blocks ---------------------------------------------------------------

  int block_low(int axis) const { return -((period(axis) + 1) / 2); }
  int block_index(BlockCoord c) const { return c.m * n_ + c.n; }
  BlockCoord block_coord(int b) const { return {b % n_, b / n_}; }

  // Sites of Lambda + (n p1, m p2) in local row-major order, no reflection.
  std::vector<Site> block_sites(BlockCoord c) const {
    check_block(c);
    std::vector<Site> out;
    for (int k2 = 0; k2 < block_side(2); ++k2) {
      for (int k1 = 0; k1 < block_side(1); ++k1) {
        out.push_back(canonical({c.n * p1_ + block_low(1) + k1, c.m * p2_ + block_low(2) + k2}));
      }
    }
    return out;
  }

  const BlockFamily& blocks() const { return blocks_; }

  // pi_t applied to a pattern on Lambda: the sites of Lambda + t with the
  // spin each one receives.
  std::vector<std::pair<Site, int>> propagate(BlockCoord c, std::uint64_t pattern) const {
    check_block(c);
    std::vector<std::pair<Site, int>> out;
    const auto sites = blocks_.block(block_index(c));
    for (int k = 0; k < blocks_.size(); ++k) {
      out.emplace_back(site(sites[k]), (pattern >> k) & 1U ? +1 : -1);
    }
    return out;
  }

  // pi_t^{-1}: the reference-block pattern whose propagation matches `c` on
  // block `b` of `family`.
  static std::uint64_t extract_pattern(const BlockFamily& family, int b, const SpinConfig& c) {
    std::uint64_t pattern = 0;
    const auto sites = family.block(b);
    for (int k = 0; k < family.size(); ++k) {
      if (c[static_cast<std::size_t>(sites[k])] > 0) pattern |= std::uint64_t{1} << k;
    }
    return pattern;
  }
  std::uint64_t extract_pattern(const SpinConfig& c, BlockCoord b) const {
    return extract_pattern(blocks_, block_index(b), c);
  }

  // The torus configuration with pi_t(pattern) on every block of `family`.
  // Overlapping boundary lines (odd periods) must agree.
  SpinConfig tile(const BlockFamily& family, std::uint64_t pattern) const {
    std::vector<int> value(site_count(), 0);
    for (int b = 0; b < family.count; ++b) {
      const auto sites = family.block(b);
      for (int k = 0; k < family.size(); ++k) {
        const int spin = (pattern >> k) & 1U ? +1 : -1;
        int& slot = value[sites[k]];
        if (slot != 0 && slot != spin) {
          throw ConsistencyError("propagated blocks disagree on an overlap line");
        }
        slot = spin;
      }
    }
    SpinConfig out = make_config(-1);
    for (int i = 0; i < site_count(); ++i) {
      if (value[i] == 0) throw ConsistencyError("block family does not cover the torus");
      out.set(static_cast<std::size_t>(i), value[i]);
    }
    return out;
  }
  SpinConfig tile_configuration(std::uint64_t pattern) const { return tile(blocks_, pattern); }

  // ---- double blocks --------------------------------------------------------

  bool has_double_kind(DoubleBlockKind k) const { return period(k.axis()) % 2 == 0; }

  std::vector<DoubleBlockKind> double_kinds() const {
    std::vector<DoubleBlockKind> out;
    for (auto k : DoubleBlockKind::all()) {
      if (has_double_kind(k)) out.push_back(k);
    }
    return out;
  }

  // Members are indexed by (j, m) for horizontal kinds, j in [0, N/2), and
  // by (n, j) for vertical kinds. The anchor of a member is the translation
  // of its lower block: 2 j p (family 1) or (2 j - 1) p (family 2) along the
  // doubled axis.
  BlockFamily double_blocks(DoubleBlockKind k) const {
    if (!has_double_kind(k)) {
      throw ConfigError("double block " + k.tag() + " requires an even period along axis " +
                        std::to_string(k.axis()));
    }
    if (n_ % 4 != 0) throw ConfigError("double blocks require N to be a multiple of 4");
    const bool horiz = k.orientation == 'h';
    BlockFamily fam;
    fam.side1 = horiz ? 2 * block_side(1) : block_side(1);
    fam.side2 = horiz ? block_side(2) : 2 * block_side(2);
    fam.count = n_ * n_ / 2;
    const int shift = k.family == 2 ? -1 : 0;
    const int jn = horiz ? n_ / 2 : n_;
    for (int idx = 0; idx < fam.count; ++idx) {
      const int a = idx % jn;
      const int b = idx / jn;
      const int bx = horiz ? 2 * a + shift : a;
      const int by = horiz ? b : 2 * b + shift;
      const bool flip1 = (a % 2) != 0;
      const bool flip2 = (b % 2) != 0;
      fam.anchors.push_back(canonical({bx * p1_, by * p2_}));
      for (int k2 = 0; k2 < fam.side2; ++k2) {
        for (int k1 = 0; k1 < fam.side1; ++k1) {
          const int l1 = flip1 ? fam.side1 - 1 - k1 : k1;
          const int l2 = flip2 ? fam.side2 - 1 - k2 : k2;
          fam.sites.push_back(index({bx * p1_ + block_low(1) + l1, by * p2_ + block_low(2) + l2}));
        }
      }
    }
    return fam;
  }

  // Sites of the double block of kind k whose lower block sits at `anchor`.
  std::vector<Site> double_block_sites(DoubleBlockKind k, Site anchor) const {
    if (!has_double_kind(k)) {
      throw ConfigError("double block " + k.tag() + " requires an even period along axis " +
                        std::to_string(k.axis()));
    }
    const int p = period(k.axis());
    const int along = k.axis() == 1 ? anchor.t1 : anchor.t2;
    const int across = k.axis() == 1 ? anchor.t2 : anchor.t1;
    const int want = k.family == 1 ? 0 : p;
    const int dim = k.axis() == 1 ? w_ : h_;
    if (SpinConfig::wrap(along, 2 * p) != want || SpinConfig::wrap(across, period(3 - k.axis())) != 0 ||
        dim % (2 * p) != 0) {
      throw ConfigError("anchor is not in the quotient subgroup of kind " + k.tag());
    }
    std::vector<Site> out;
    const Site second = k.axis() == 1 ? Site{anchor.t1 + p, anchor.t2} : Site{anchor.t1, anchor.t2 + p};
    for (Site base : {anchor, second}) {
      for (int k2 = 0; k2 < block_side(2); ++k2) {
        for (int k1 = 0; k1 < block_side(1); ++k1) {
          out.push_back(canonical({base.t1 + block_low(1) + k1, base.t2 + block_low(2) + k2}));
        }
      }
    }
    return out;
  }

  // ---- the 2 x 2 cell torus -------------------------------------------------

  // The 2 p1 x 2 p2 torus carrying one period of any tiled configuration.
  ModelGeometry sub_torus_2x2() const { return ModelGeometry(kind_, p1_, p2_, 2); }

  // Restriction of a configuration with period (2 p1, 2 p2) to the sub torus.
  SpinConfig restrict_to_sub_torus(const SpinConfig& c) const {
    check_dims(c);
    const ModelGeometry sub = sub_torus_2x2();
    SpinConfig out = sub.make_config(-1);
    for (int t2 = 0; t2 < sub.height(); ++t2) {
      for (int t1 = 0; t1 < sub.width(); ++t1) out.set(Site{t1, t2}, c.at({t1, t2}));
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind_);
    if (is_strip()) {
      j["L"] = p2_;
    } else {
      j["L1"] = p1_;
      j["L2"] = p2_;
    }
    j["N"] = n_;
    j["dims"] = {w_, h_};
    return j;
  }

  void check_dims(const SpinConfig& c) const {
    if (c.width() != w_ || c.height() != h_) {
      throw ConfigError("configuration dimensions do not match the geometry");
    }
  }

 private:
  ModelGeometry(FieldKind kind, int p1, int p2, int n)
      : kind_(kind), p1_(p1), p2_(p2), n_(n), w_(n * p1), h_(n * p2) {
    if (w_ < 2 || h_ < 2) throw ConfigError("torus dimensions must be at least 2");
    field_.resize(site_count());
    nbr_.resize(4 * static_cast<std::size_t>(site_count()));
    for (int i = 0; i < site_count(); ++i) {
      const Site s = site(i);
      const int cell2 = s.t2 / p2_;
      const int parity = kind_ == FieldKind::CellBoard ? (s.t1 / p1_ + cell2) % 2 : cell2 % 2;
      field_[i] = parity == 0 ? +1 : -1;
      nbr_[4 * i + 0] = index({s.t1 + 1, s.t2});
      nbr_[4 * i + 1] = index({s.t1 - 1, s.t2});
      nbr_[4 * i + 2] = index({s.t1, s.t2 + 1});
      nbr_[4 * i + 3] = index({s.t1, s.t2 - 1});
    }
    blocks_.side1 = block_side(1);
    blocks_.side2 = block_side(2);
    blocks_.count = n_ * n_;
    for (int b = 0; b < blocks_.count; ++b) {
      const BlockCoord c = block_coord(b);
      blocks_.anchors.push_back(canonical({c.n * p1_, c.m * p2_}));
      for (int k2 = 0; k2 < blocks_.side2; ++k2) {
        for (int k1 = 0; k1 < blocks_.side1; ++k1) {
          const int l1 = c.n % 2 ? blocks_.side1 - 1 - k1 : k1;
          const int l2 = c.m % 2 ? blocks_.side2 - 1 - k2 : k2;
          blocks_.sites.push_back(index({c.n * p1_ + block_low(1) + l1, c.m * p2_ + block_low(2) + l2}));
        }
      }
    }
  }

  void check_block(BlockCoord c) const {
    if (c.n < 0 || c.n >= n_ || c.m < 0 || c.m >= n_) throw ConfigError("block coordinate out of range");
  }

  FieldKind kind_;
  int p1_, p2_, n_, w_, h_;
  std::vector<int> field_;
  std::vector<int> nbr_;
  BlockFamily blocks_;
};

}  // namespace cellboard
