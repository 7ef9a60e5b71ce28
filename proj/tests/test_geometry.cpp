#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "cellboard/geometry.hpp"

using namespace cellboard;

namespace {

int mod(int a, int n) { return ((a % n) + n) % n; }

SpinConfig random_config(const ModelGeometry& g, std::mt19937_64& rng) {
  SpinConfig c = g.make_config(-1);
  for (int i = 0; i < g.site_count(); ++i) c.set(static_cast<std::size_t>(i), rng() & 1 ? +1 : -1);
  return c;
}

std::vector<ModelGeometry> small_geometries() {
  return {ModelGeometry::cell_board(1, 1, 2), ModelGeometry::cell_board(1, 1, 4), ModelGeometry::cell_board(2, 1, 4),
          ModelGeometry::cell_board(2, 2, 4), ModelGeometry::cell_board(3, 2, 2), ModelGeometry::cell_board(3, 1, 4),
          ModelGeometry::cell_board(4, 2, 4), ModelGeometry::strip(1, 4),        ModelGeometry::strip(2, 4),
          ModelGeometry::strip(3, 4)};
}

}  // namespace

TEST(Geometry, Dims) {
  auto g = ModelGeometry::cell_board(3, 2, 2);
  EXPECT_EQ(g.width(), 6);
  EXPECT_EQ(g.height(), 4);
  EXPECT_EQ(g.block_count(), 4);
  EXPECT_EQ(g.block_side(1), 4);
  EXPECT_EQ(g.block_side(2), 2);
  EXPECT_EQ(g.block_size(), 8);

  auto g11 = ModelGeometry::cell_board(1, 1, 2);
  EXPECT_EQ(g11.width(), 2);
  EXPECT_EQ(g11.height(), 2);
  EXPECT_EQ(g11.block_count(), 4);
  EXPECT_EQ(g11.block_size(), 4);

  auto s = ModelGeometry::strip(2, 4);
  EXPECT_EQ(s.width(), 4);
  EXPECT_EQ(s.height(), 8);
}

TEST(Geometry, RejectsBadScale) {
  EXPECT_THROW(ModelGeometry::cell_board(1, 1, 3), ConfigError);
  EXPECT_THROW(ModelGeometry::cell_board(0, 1, 2), ConfigError);
  EXPECT_THROW(ModelGeometry::cell_board(1, 1, 0), ConfigError);
  EXPECT_THROW(ModelGeometry::strip(1, 2), ConfigError);
  EXPECT_THROW(ModelGeometry::strip(1, 6), ConfigError);
  EXPECT_THROW(ModelGeometry::strip(0, 4), ConfigError);
}

TEST(Geometry, FieldSign) {
  auto g = ModelGeometry::cell_board(3, 2, 2);
  EXPECT_EQ(g.field_sign(Site{0, 0}), +1);
  EXPECT_EQ(g.field_sign(Site{3, 0}), -1);
  auto s = ModelGeometry::strip(2, 4);
  EXPECT_EQ(s.field_sign(Site{5 % 4, 2}), -1);
  EXPECT_EQ(s.field_sign(Site{1, 2}), -1);
  EXPECT_EQ(s.field_sign(Site{1, 4}), +1);
}

TEST(Geometry, FieldBalanceAndFormula) {
  for (const auto& g : small_geometries()) {
    int sum = 0;
    for (int t2 = 0; t2 < g.height(); ++t2) {
      for (int t1 = 0; t1 < g.width(); ++t1) {
        const int f = g.field_sign(Site{t1, t2});
        sum += f;
        int expect;
        if (g.is_strip()) {
          expect = (t2 / g.strip_height()) % 2 == 0 ? 1 : -1;
        } else {
          expect = (t1 / g.L1() + t2 / g.L2()) % 2 == 0 ? 1 : -1;
        }
        EXPECT_EQ(f, expect);
      }
    }
    EXPECT_EQ(sum, 0);
  }
}

TEST(Geometry, RowMajorIndex) {
  auto g = ModelGeometry::cell_board(3, 2, 2);
  EXPECT_EQ(g.index(Site{2, 3}), 3 * 6 + 2);
  EXPECT_EQ(g.index(Site{-1, -1}), 3 * 6 + 5);
  EXPECT_EQ(g.site(20), (Site{2, 3}));
}

TEST(Geometry, ReflectionSingleSite) {
  auto g = ModelGeometry::cell_board(1, 1, 2);
  SpinConfig c = g.make_config(-1);
  c.set(Site{0, 0}, +1);
  auto r = g.apply_reflection(ReflectionPlane::at(1, 0.5), c);
  SpinConfig expect = g.make_config(-1);
  expect.set(Site{1, 0}, +1);
  EXPECT_EQ(r, expect);
}

TEST(Geometry, ReflectionRejectsMisaligned) {
  EXPECT_THROW(ReflectionPlane::at(1, 0.25), ConfigError);
  EXPECT_THROW(ReflectionPlane::at(3, 0.5), ConfigError);
  EXPECT_NO_THROW(ReflectionPlane::at(2, -0.5));
}

TEST(Geometry, ReflectionInvolutionAndConstants) {
  std::mt19937_64 rng(7);
  for (const auto& g : small_geometries()) {
    auto planes = g.planes();
    planes.push_back(ModelGeometry::q_line(1));
    planes.push_back(ModelGeometry::q_line(2));
    for (const auto& pl : planes) {
      EXPECT_EQ(g.apply_reflection(pl, g.make_config(+1)), g.make_config(+1));
      for (int k = 0; k < 100; ++k) {
        const auto c = random_config(g, rng);
        EXPECT_EQ(g.apply_reflection(pl, g.apply_reflection(pl, c)), c);
      }
    }
  }
}

TEST(Geometry, PlaneParityLaw) {
  for (const auto& g : small_geometries()) {
    const auto planes = g.planes();
    EXPECT_EQ(static_cast<int>(planes.size()), g.N());
    for (const auto& pl : planes) {
      EXPECT_TRUE(g.in_plane_set(pl));
      EXPECT_EQ(pl.through_sites(), g.period(pl.axis) % 2 == 1);
      // offset = n p + (p - 1)/2
      const double p = g.period(pl.axis);
      const double n = (pl.offset() - (p - 1) / 2) / p;
      EXPECT_DOUBLE_EQ(n, std::round(n));
    }
    EXPECT_FALSE(g.in_plane_set(ModelGeometry::q_line(1)));
    EXPECT_FALSE(g.in_plane_set(ModelGeometry::q_line(2)));
  }
}

TEST(Geometry, ReflectionPreservesFieldUpToSignPattern) {
  // Reflections in the plane set map the field onto itself.
  for (const auto& g : small_geometries()) {
    for (const auto& pl : g.planes()) {
      for (int i = 0; i < g.site_count(); ++i) {
        EXPECT_EQ(g.field_sign(g.reflect(g.site(i), pl)), g.field_sign(i));
      }
    }
  }
}

TEST(Geometry, HalvesPartitionTorus) {
  for (const auto& g : small_geometries()) {
    for (const auto& pl : g.planes()) {
      const auto h = g.halves(pl);
      std::set<int> left(h.left.begin(), h.left.end());
      EXPECT_EQ(left.size(), h.left.size());
      std::set<int> right;
      for (int i = 0; i < g.site_count(); ++i) {
        if (!left.count(i)) right.insert(i);
      }
      // theta maps the strict left part onto the right part and fixes the plane sites
      std::set<int> plane(h.plane_sites.begin(), h.plane_sites.end());
      std::set<int> image;
      for (int s : h.left) {
        const int r = g.index(g.reflect(g.site(s), pl));
        if (plane.count(s)) {
          EXPECT_EQ(r, s);
        } else {
          image.insert(r);
        }
      }
      EXPECT_EQ(image, right);
    }
  }
}

TEST(Geometry, BlockSitesShapes) {
  auto g22 = ModelGeometry::cell_board(2, 2, 4);
  std::vector<int> cover(g22.site_count(), 0);
  for (int b = 0; b < g22.block_count(); ++b) {
    auto sites = g22.block_sites(g22.block_coord(b));
    EXPECT_EQ(sites.size(), 4u);
    for (auto s : sites) cover[g22.index(s)]++;
  }
  for (int c : cover) EXPECT_EQ(c, 1);  // disjoint tiles

  auto g31 = ModelGeometry::cell_board(3, 1, 4);
  EXPECT_EQ(g31.block_side(1), 4);
  EXPECT_EQ(g31.block_side(2), 2);
  auto a = g31.block_sites({0, 0});
  auto b = g31.block_sites({1, 0});
  int shared = 0;
  for (auto s : a) shared += std::count(b.begin(), b.end(), s);
  EXPECT_EQ(shared, 2);  // one column of 2 sites
  auto up = g31.block_sites({0, 1});
  shared = 0;
  for (auto s : a) shared += std::count(up.begin(), up.end(), s);
  EXPECT_EQ(shared, 4);  // one row of 4 sites

  auto st = ModelGeometry::strip(1, 4);
  EXPECT_EQ(st.block_side(1), 2);
  EXPECT_EQ(st.block_side(2), 2);
}

TEST(Geometry, BlockSitesOracle) {
  // Lambda: |t_i + 1/2| <= B_i / 2, i.e. t_i in [-(B_i)/2, B_i/2 - 1].
  for (const auto& g : small_geometries()) {
    for (int b = 0; b < g.block_count(); ++b) {
      const auto c = g.block_coord(b);
      std::set<int> expect;
      const int b1 = g.period(1) % 2 == 0 ? g.period(1) : g.period(1) + 1;
      const int b2 = g.period(2) % 2 == 0 ? g.period(2) : g.period(2) + 1;
      for (int x = -b1 / 2; x <= b1 / 2 - 1; ++x) {
        for (int y = -b2 / 2; y <= b2 / 2 - 1; ++y) {
          expect.insert(mod(y + c.m * g.period(2), g.height()) * g.width() + mod(x + c.n * g.period(1), g.width()));
        }
      }
      std::set<int> got;
      for (auto s : g.block_sites(c)) got.insert(g.index(s));
      EXPECT_EQ(got, expect);
      EXPECT_TRUE(got.count(g.index(Site{c.n * g.period(1), c.m * g.period(2)})));
    }
  }
}

TEST(Geometry, BlocksCoverTorus) {
  for (const auto& g : small_geometries()) {
    std::vector<int> cover(g.site_count(), 0);
    for (int b = 0; b < g.block_count(); ++b) {
      for (auto s : g.block_sites(g.block_coord(b))) cover[g.index(s)]++;
    }
    for (int c : cover) {
      EXPECT_GE(c, 1);
      if (g.period(1) % 2 == 0 && g.period(2) % 2 == 0) {
        EXPECT_EQ(c, 1);
      }
    }
  }
}

TEST(Geometry, PropagateConstantsAndEvenTranslation) {
  for (const auto& g : small_geometries()) {
    const int bits = g.block_size();
    if (bits > 16) continue;
    const std::uint64_t full = (std::uint64_t{1} << bits) - 1;
    for (int b = 0; b < g.block_count(); ++b) {
      const auto c = g.block_coord(b);
      for (auto [s, v] : g.propagate(c, full)) EXPECT_EQ(v, +1);
      for (auto [s, v] : g.propagate(c, 0)) EXPECT_EQ(v, -1);
      if (c.n % 2 == 0 && c.m % 2 == 0) {
        // pure translation: local site k maps to (block site k) + t
        const auto ref = g.block_sites({0, 0});
        const auto moved = g.propagate(c, 0x5 & full);
        for (int k = 0; k < bits; ++k) {
          const Site want = g.canonical({ref[k].t1 + c.n * g.period(1), ref[k].t2 + c.m * g.period(2)});
          EXPECT_EQ(moved[k].first, want);
          EXPECT_EQ(moved[k].second, (0x5 >> k) & 1 ? +1 : -1);
        }
      }
    }
  }
}

TEST(Geometry, PropagationRoundTripAndInjective) {
  for (const auto& g : small_geometries()) {
    const int bits = g.block_size();
    if (bits > 12) continue;
    for (int b = 0; b < g.block_count(); ++b) {
      const auto c = g.block_coord(b);
      std::set<std::vector<int>> images;
      for (std::uint64_t p = 0; p < (std::uint64_t{1} << bits); ++p) {
        SpinConfig cfg = g.make_config(-1);
        std::vector<int> img;
        for (auto [s, v] : g.propagate(c, p)) {
          cfg.set(s, v);
          img.push_back(g.index(s) * 2 + (v > 0));
        }
        std::sort(img.begin(), img.end());
        images.insert(img);
        EXPECT_EQ(g.extract_pattern(cfg, c), p);
      }
      EXPECT_EQ(images.size(), std::size_t{1} << bits);
    }
  }
}

TEST(Geometry, PropagationIsReflectionBetweenNeighbours) {
  // The copy on block n+1 is the mirror of the copy on block n through the
  // plane line between them.
  std::mt19937_64 rng(3);
  for (const auto& g : small_geometries()) {
    const int bits = g.block_size();
    for (int rep = 0; rep < 10; ++rep) {
      const std::uint64_t p = rng() & ((std::uint64_t{1} << bits) - 1);
      const SpinConfig tiled = g.tile_configuration(p);
      for (const auto& pl : g.planes()) {
        EXPECT_EQ(g.apply_reflection(pl, tiled), tiled);
      }
    }
  }
}

TEST(Geometry, TileHandPropagation) {
  // CellBoard(1,1), N=2: Lambda = {-1,0}^2, pattern (+,-;-,+) in local
  // row-major order (k1 fastest) starting at (-1,-1).
  auto g = ModelGeometry::cell_board(1, 1, 2);
  const std::uint64_t pattern = 0b1001;  // local (0,0)+, (1,0)-, (0,1)-, (1,1)+
  const SpinConfig t = g.tile_configuration(pattern);
  // local (0,0) = site (-1,-1) = (1,1); local (1,1) = (0,0).
  EXPECT_EQ(t.at({1, 1}), +1);
  EXPECT_EQ(t.at({0, 0}), +1);
  EXPECT_EQ(t.at({0, 1}), -1);
  EXPECT_EQ(t.at({1, 0}), -1);
}

TEST(Geometry, TilePeriodicity) {
  std::mt19937_64 rng(11);
  for (const auto& g : small_geometries()) {
    const int bits = g.block_size();
    EXPECT_EQ(g.tile_configuration((std::uint64_t{1} << bits) - 1), g.make_config(+1));
    for (int rep = 0; rep < 20; ++rep) {
      const std::uint64_t p = rng() & ((std::uint64_t{1} << bits) - 1);
      const SpinConfig t = g.tile_configuration(p);
      for (int i = 0; i < g.site_count(); ++i) {
        const Site s = g.site(i);
        EXPECT_EQ(t.at({s.t1 + 2 * g.period(1), s.t2}), t[i]);
        EXPECT_EQ(t.at({s.t1, s.t2 + 2 * g.period(2)}), t[i]);
      }
    }
  }
}

TEST(Geometry, DoubleBlocks) {
  auto g = ModelGeometry::cell_board(2, 1, 4);
  auto sites = g.double_block_sites({'h', 1}, Site{0, 0});
  EXPECT_EQ(sites.size(), 8u);
  std::set<int> got;
  for (auto s : sites) got.insert(g.index(s));
  std::set<int> expect;
  for (auto s : g.block_sites({0, 0})) expect.insert(g.index(s));
  for (auto s : g.block_sites({1, 0})) expect.insert(g.index(s));
  EXPECT_EQ(got, expect);
  EXPECT_EQ(got.size(), 8u);

  auto g31 = ModelGeometry::cell_board(3, 1, 4);
  EXPECT_THROW(g31.double_block_sites({'v', 1}, Site{0, 0}), ConfigError);
  EXPECT_THROW(g31.double_blocks({'v', 2}), ConfigError);
  EXPECT_THROW(g.double_block_sites({'h', 1}, Site{2, 0}), ConfigError);

  auto fam = g.double_blocks({'h', 1});
  EXPECT_EQ(fam.count, 8);
  for (auto a : fam.anchors) EXPECT_EQ(a.t1 % (2 * g.L1()), 0);
  auto fam2 = g.double_blocks({'h', 2});
  for (auto a : fam2.anchors) EXPECT_EQ(mod(a.t1, 2 * g.L1()), g.L1());
  EXPECT_THROW(ModelGeometry::cell_board(2, 1, 2).double_blocks({'h', 1}), ConfigError);
}

TEST(Geometry, DoubleBlockFamiliesCoverAndTile) {
  std::mt19937_64 rng(5);
  for (const auto& g : small_geometries()) {
    if (g.N() % 4 != 0) continue;
    for (auto k : g.double_kinds()) {
      auto fam = g.double_blocks(k);
      EXPECT_EQ(fam.size(), 2 * g.block_size());
      std::vector<int> cover(g.site_count(), 0);
      for (int b = 0; b < fam.count; ++b) {
        std::set<int> ids(fam.block(b).begin(), fam.block(b).end());
        EXPECT_EQ(static_cast<int>(ids.size()), fam.size());
        for (int s : ids) cover[s]++;
        // matches the anchor-based site list as a set
        auto listed = g.double_block_sites(k, fam.anchors[b]);
        std::set<int> lids;
        for (auto s : listed) lids.insert(g.index(s));
        EXPECT_EQ(ids, lids);
      }
      for (int c : cover) EXPECT_GE(c, 1);
      if (fam.size() > 16) continue;
      for (int rep = 0; rep < 10; ++rep) {
        const std::uint64_t p = rng() & ((std::uint64_t{1} << fam.size()) - 1);
        const SpinConfig t = g.tile(fam, p);
        for (int b = 0; b < fam.count; ++b) EXPECT_EQ(ModelGeometry::extract_pattern(fam, b, t), p);
        // mirror lines between members along the doubled axis, and every
        // plane across it
        const int per = g.period(k.axis());
        const int boundary = k.family == 1 ? -per - 1 : per - 1;
        for (const auto& pl : g.planes()) {
          if (pl.axis != k.axis() || mod(pl.twice_offset - boundary, 4 * per) == 0) {
            EXPECT_EQ(g.apply_reflection(pl, t), t);
          }
        }
      }
    }
  }
}

TEST(Geometry, SubTorus) {
  auto g = ModelGeometry::cell_board(3, 2, 4);
  auto sub = g.sub_torus_2x2();
  EXPECT_EQ(sub.width(), 6);
  EXPECT_EQ(sub.height(), 4);
  int sum = 0;
  for (int i = 0; i < sub.site_count(); ++i) sum += sub.field_sign(i);
  EXPECT_EQ(sum, 0);
  EXPECT_EQ(ModelGeometry::cell_board(1, 1, 4).sub_torus_2x2().site_count(), 4);
  for (int i = 0; i < sub.site_count(); ++i) EXPECT_EQ(sub.field_sign(i), g.field_sign(sub.site(i)));
}

TEST(Geometry, Json) {
  auto j = ModelGeometry::cell_board(3, 2, 2).to_json();
  EXPECT_EQ(j["kind"], "cellboard");
  EXPECT_EQ(j["dims"][0], 6);
  auto s = ModelGeometry::strip(2, 4).to_json();
  EXPECT_EQ(s["kind"], "strip");
  EXPECT_EQ(s["L"], 2);
}
