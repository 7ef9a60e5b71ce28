#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "cellboard/exact.hpp"

using namespace cellboard;

namespace {

// mu(pred) by looping over every configuration with a full energy evaluation.
double brute_prob(const ModelGeometry& g, const ModelParams& p, const std::function<bool(const SpinConfig&)>& pred) {
  std::vector<double> all, hit;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << g.site_count()); ++m) {
    const SpinConfig c = SpinConfig::from_mask(g.width(), g.height(), m);
    const double w = -p.beta * energy(g, p, c);
    all.push_back(w);
    if (pred(c)) hit.push_back(w);
  }
  return std::exp(log_sum_exp(hit) - log_sum_exp(all));
}

// sigma restricted to block b matches pi_b of a pattern in `ev`.
bool block_in_event(const ModelGeometry& g, const SpinConfig& c, BlockCoord b, const BlockEvent& ev) {
  for (std::uint64_t pat : ev.patterns()) {
    bool match = true;
    for (auto [s, v] : g.propagate(b, pat)) match = match && c.at(s) == v;
    if (match) return true;
  }
  return false;
}

bool is_constant_block(const ModelGeometry& g, const SpinConfig& c, BlockCoord b, int v) {
  for (auto s : g.block_sites(b)) {
    if (c.at(s) != v) return false;
  }
  return true;
}

}  // namespace

TEST(BlockEvent, Basics) {
  auto full = BlockEvent::full(4);
  EXPECT_EQ(full.count(), 16u);
  EXPECT_TRUE(full.is_full());
  auto bad = BlockEvent::bad(4);
  EXPECT_EQ(bad.count(), 14u);
  EXPECT_TRUE(bad.is_bad_event());
  EXPECT_FALSE(bad.contains(0));
  EXPECT_FALSE(bad.contains(15));
  auto one = BlockEvent::single(4, 6);
  EXPECT_EQ(one.single_pattern(), std::optional<std::uint64_t>(6));
  EXPECT_TRUE(one.subset_of(bad));
  EXPECT_THROW(BlockEvent::from_patterns(4, {}), ConfigError);
  EXPECT_THROW(BlockEvent::full(30), GuardError);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) EXPECT_GE(BlockEvent::random(4, 0.05, rng).count(), 1u);
  EXPECT_EQ(BlockEvent::full(7).count(), 128u);
}

TEST(Exact, LogZExamples) {
  auto g = ModelGeometry::cell_board(1, 1, 4);
  EXPECT_NEAR(log_partition_enumerate(g, {1, 1, 0}), 16 * std::log(2.0), 1e-12);
  const double a = log_partition_enumerate(g, {1, 1, 1.2});
  EXPECT_NEAR(a, log_partition_transfer(g, {1, 1, 1.2}), 1e-10 * std::abs(a));
  auto e = ExactEnsemble::enumerate(g, {1, 1, 1.2});
  EXPECT_DOUBLE_EQ(e.log_z(), a);
  auto t = ExactEnsemble::transfer(g, {1, 1, 1.2});
  EXPECT_NEAR(t.log_z(), a, 1e-10 * std::abs(a));
  EXPECT_THROW(t.histogram(), GuardError);
  EXPECT_NEAR(e.with_beta(0).log_z(), 16 * std::log(2.0), 1e-12);
}

TEST(Exact, Normalization) {
  auto g = ModelGeometry::cell_board(1, 1, 4);
  auto e = ExactEnsemble::enumerate(g, {1, 1, 0.9});
  EXPECT_NEAR(event_probability(e, [](std::uint64_t) { return true; }), 1.0, 1e-12);
  const double a = event_probability(e, [](std::uint64_t m) { return (m & 1) != 0; });
  const double b = event_probability(e, [](std::uint64_t m) { return (m & 1) == 0; });
  EXPECT_NEAR(a + b, 1.0, 1e-12);
  // pinned ensemble at beta = 0 normalises over the unpinned sites
  auto pinned = ExactEnsemble::enumerate(g, {1, 1, 0}, {{0, 1}, {3, -1}});
  EXPECT_NEAR(pinned.log_z(), 14 * std::log(2.0), 1e-12);
  EXPECT_NEAR(event_probability(pinned, [](std::uint64_t) { return true; }), 1.0, 1e-12);
}

TEST(Exact, EventProbabilityMatchesBruteForce) {
  auto g = ModelGeometry::cell_board(1, 1, 4);
  const ModelParams p{1, 1, 0.7};
  auto e = ExactEnsemble::enumerate(g, p);
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<std::pair<int, BlockEvent>> evs;
    evs.emplace_back(0, BlockEvent::random(4, 0.4, rng));
    evs.emplace_back(5, BlockEvent::single(4, rng() & 15));
    evs.emplace_back(10, BlockEvent::bad(4));
    const double got = std::exp(log_block_event_probability(e, g.blocks(), evs));
    const double want = brute_prob(g, p, [&](const SpinConfig& c) {
      for (auto& [b, ev] : evs) {
        if (!block_in_event(g, c, g.block_coord(b), ev)) return false;
      }
      return true;
    });
    EXPECT_NEAR(got, want, 1e-12 + 1e-10 * want);
  }
}

TEST(Exact, SymmetryIdentity) {
  for (auto g : {ModelGeometry::cell_board(1, 1, 2), ModelGeometry::cell_board(1, 1, 4), ModelGeometry::strip(1, 4)}) {
    for (double beta : {0.5, 2.0}) {
      auto e = ExactEnsemble::enumerate(g, {1, 1, beta});
      const int bits = g.block_size();
      std::vector<std::pair<int, BlockEvent>> plus{{0, BlockEvent::single(bits, BlockEvent::all_plus(bits))}};
      std::vector<std::pair<int, BlockEvent>> minus{{0, BlockEvent::single(bits, 0)}};
      std::vector<std::pair<int, BlockEvent>> bad{{0, BlockEvent::bad(bits)}};
      const double mp = std::exp(log_block_event_probability(e, g.blocks(), plus));
      const double mm = std::exp(log_block_event_probability(e, g.blocks(), minus));
      const double mr = std::exp(log_block_event_probability(e, g.blocks(), bad));
      EXPECT_NEAR(mp, mm, 1e-12);
      EXPECT_NEAR(mp, (1 - mr) / 2, 1e-12);
      const double brute = brute_prob(g, {1, 1, beta}, [&](const SpinConfig& c) { return is_constant_block(g, c, {0, 0}, 1); });
      EXPECT_NEAR(mp, brute, 1e-12);
    }
  }
}

TEST(Exact, ZSinglePattern) {
  auto g = ModelGeometry::cell_board(1, 1, 2);
  const ModelParams p{1, 1, 1.3};
  auto e = ExactEnsemble::enumerate(g, p);
  // all-plus: (e^{-beta H(sigma+)} / Z)^{1/N^2}
  const auto z = z_quantity(e, BlockEvent::single(4, 15));
  EXPECT_EQ(z.route, "tiled");
  EXPECT_NEAR(z.log_value, (-p.beta * energy(g, p, g.make_config(+1)) - e.log_z()) / 4, 1e-12);
  // every single pattern against brute force over the intersection of all propagations
  for (std::uint64_t pat = 0; pat < 16; ++pat) {
    const auto ev = BlockEvent::single(4, pat);
    const double want = std::pow(brute_prob(g, p,
                                            [&](const SpinConfig& c) {
                                              for (int b = 0; b < 4; ++b) {
                                                if (!block_in_event(g, c, g.block_coord(b), ev)) return false;
                                              }
                                              return true;
                                            }),
                                 0.25);
    EXPECT_NEAR(z_quantity(e, ev).value, want, 1e-12);
  }
}

TEST(Exact, ZSubadditiveAndMonotone) {
  auto g = ModelGeometry::cell_board(1, 1, 2);
  for (double beta : {0.5, 1.0, 2.0}) {
    auto e = ExactEnsemble::enumerate(g, {1, 1, beta});
    const double zr = z_quantity(e, BlockEvent::bad(4)).value;
    double sum = 0;
    for (std::uint64_t pat = 1; pat < 15; ++pat) sum += z_quantity(e, BlockEvent::single(4, pat)).value;
    EXPECT_LE(zr, sum * (1 + 1e-12));
  }
  std::mt19937_64 rng(9);
  auto e = ExactEnsemble::enumerate(g, {1, 1, 1});
  for (int rep = 0; rep < 20; ++rep) {
    auto a = BlockEvent::random(4, 0.3, rng);
    auto b = a;
    for (std::uint64_t pat = 0; pat < 16; ++pat) {
      if (rng() & 1) b.insert(pat);
    }
    ASSERT_TRUE(a.subset_of(b));
    EXPECT_LE(z_quantity(e, a).value, z_quantity(e, b).value * (1 + 1e-12));
  }
}

TEST(Exact, ZDouble) {
  // constant double-block pattern: (e^{-beta H(sigma+)}/Z)^{2/N^2}
  auto g = ModelGeometry::cell_board(2, 1, 4);  // 8 x 4, beyond enumeration: transfer-matrix Z
  const ModelParams p{1, 1, 1.1};
  auto e = ExactEnsemble::transfer(g, p);
  const int bits = 2 * g.block_size();
  const auto z = z_double(e, {'h', 1}, BlockEvent::single(bits, BlockEvent::all_plus(bits)));
  EXPECT_NEAR(z.log_value, (-p.beta * energy(g, p, g.make_config(+1)) - e.log_z()) * 2 / 16, 1e-12);
  const auto zs = z_double(e, {'h', 2}, BlockEvent::single(bits, 0x5a));
  EXPECT_TRUE(std::isfinite(zs.log_value));
  EXPECT_THROW(z_double(e, {'v', 1}, BlockEvent::single(bits, 0)), ConfigError);
  auto g2 = ModelGeometry::cell_board(2, 2, 2);
  auto e2 = ExactEnsemble::enumerate(g2, p);
  EXPECT_THROW(z_double(e2, {'h', 1}, BlockEvent::single(8, 0)), ConfigError);
}

TEST(Exact, ZDoubleTiledPattern) {
  // z of a single double-block pattern is the tiled weight to the power 2/N^2
  auto g = ModelGeometry::cell_board(2, 1, 4);
  const ModelParams p{1, 0.6, 0.9};
  auto e = ExactEnsemble::transfer(g, p);
  auto fam = g.double_blocks({'h', 2});
  const std::uint64_t pat = 0xa7;
  const SpinConfig tiled = g.tile(fam, pat);
  for (int b = 0; b < fam.count; ++b) EXPECT_EQ(ModelGeometry::extract_pattern(fam, b, tiled), pat);
  const double want = (-p.beta * energy(g, p, tiled) - e.log_z()) * 2 / 16;
  EXPECT_NEAR(z_double(e, {'h', 2}, BlockEvent::single(8, pat)).log_value, want, 1e-12);
}

TEST(Exact, RpGramBruteForce) {
  // E(1[sigma_L = A] 1[(theta sigma)_L = B]) over full left-half configurations,
  // straight from apply_reflection, against the block-diagonal Gram.
  for (auto g : {ModelGeometry::cell_board(1, 1, 2), ModelGeometry::cell_board(2, 1, 2)}) {
    const ModelParams p{1, 1, 1.5};
    auto e = ExactEnsemble::enumerate(g, p);
    for (const auto& pl : g.planes()) {
      const auto gram = gram_matrix(e, pl);
      const auto halves = g.halves(pl);
      const int nl = static_cast<int>(halves.left.size());
      std::vector<double> full(std::size_t{1} << (2 * nl), 0.0);
      auto left_index = [&](const SpinConfig& c) {
        std::size_t a = 0;
        for (int k = 0; k < nl; ++k) a |= std::size_t(c[std::size_t(halves.left[k])] > 0) << k;
        return a;
      };
      for (std::uint64_t m = 0; m < (std::uint64_t{1} << g.site_count()); ++m) {
        const SpinConfig c = SpinConfig::from_mask(g.width(), g.height(), m);
        const double w = std::exp(-p.beta * energy(g, p, c) - e.log_z());
        full[(left_index(c) << nl) | left_index(g.apply_reflection(pl, c))] += w;
      }
      std::vector<int> interior;
      for (int s : halves.left) {
        if (std::find(halves.plane_sites.begin(), halves.plane_sites.end(), s) == halves.plane_sites.end()) {
          interior.push_back(s);
        }
      }
      auto pos = [&](int site) {
        return static_cast<int>(std::find(halves.left.begin(), halves.left.end(), site) - halves.left.begin());
      };
      for (std::size_t A = 0; A < (std::size_t{1} << nl); ++A) {
        for (std::size_t B = 0; B < (std::size_t{1} << nl); ++B) {
          std::size_t ka = 0, kb = 0;
          for (std::size_t k = 0; k < halves.plane_sites.size(); ++k) {
            ka |= ((A >> pos(halves.plane_sites[k])) & 1) << k;
            kb |= ((B >> pos(halves.plane_sites[k])) & 1) << k;
          }
          const double v = full[(A << nl) | B];
          if (ka != kb) {
            EXPECT_EQ(v, 0.0);
            continue;
          }
          Eigen::Index ia = 0, ib = 0;
          for (std::size_t k = 0; k < interior.size(); ++k) {
            ia |= static_cast<Eigen::Index>((A >> pos(interior[k])) & 1) << k;
            ib |= static_cast<Eigen::Index>((B >> pos(interior[k])) & 1) << k;
          }
          EXPECT_NEAR(gram.blocks[ka](ia, ib), v, 1e-14);
        }
      }
    }
  }
}

TEST(Exact, RpPasses) {
  for (auto g : {ModelGeometry::cell_board(1, 1, 2), ModelGeometry::cell_board(2, 1, 2), ModelGeometry::cell_board(1, 1, 4),
                 ModelGeometry::strip(1, 4)}) {
    for (double beta : {0.0, 1.0, 5.0}) {
      auto e = ExactEnsemble::enumerate(g, {1, 1, beta});
      for (const auto& pl : g.planes()) {
        const auto r = verify_rp(e, pl);
        EXPECT_EQ(r.verdict, Verdict::Pass) << r.to_json().dump();
      }
    }
  }
  auto g = ModelGeometry::cell_board(1, 1, 2);
  auto e = ExactEnsemble::enumerate(g, {1, 1, 1});
  EXPECT_THROW(verify_rp(e, ModelGeometry::q_line(1)), ConfigError);
}

TEST(Exact, RpDetectsNonReflectionPositiveMeasure) {
  // The same Gram construction on a measure that is not reflection positive:
  // an antiferromagnetic weight across the plane makes M indefinite. Emulated
  // by flipping the reflected half, i.e. pairing a with the complement of b.
  auto g = ModelGeometry::cell_board(1, 1, 4);
  auto e = ExactEnsemble::enumerate(g, {1, 0, 1.0});
  const auto pl = g.planes()[0];
  auto gram = gram_matrix(e, pl);
  for (auto& m : gram.blocks) m = m.colwise().reverse().eval();
  double min_eig = 0;
  for (const auto& m : gram.blocks) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  EXPECT_LT(min_eig, -1e-6);
}

TEST(Exact, ChessboardTrivialAndSingle) {
  auto g = ModelGeometry::cell_board(1, 1, 4);
  auto e = ExactEnsemble::enumerate(g, {1, 1, 2});
  std::vector<BlockAssignment> full{{{0, 0}, BlockEvent::full(4)}, {{1, 2}, BlockEvent::full(4)}};
  const auto r = verify_chessboard(e, full);
  EXPECT_NEAR(r.lhs, 1, 1e-12);
  EXPECT_NEAR(r.rhs, 1, 1e-12);
  EXPECT_EQ(r.verdict, Verdict::Pass);

  std::vector<BlockAssignment> bad{{{0, 0}, BlockEvent::bad(4)}};
  const auto rb = verify_chessboard(e, bad);
  EXPECT_EQ(rb.verdict, Verdict::Pass);
  EXPECT_LE(rb.lhs, rb.rhs);

  std::vector<BlockAssignment> dup{{{0, 0}, BlockEvent::bad(4)}, {{0, 0}, BlockEvent::full(4)}};
  EXPECT_THROW(verify_chessboard(e, dup), ConfigError);
}

TEST(Exact, ChessboardLhsBruteForce) {
  auto g = ModelGeometry::cell_board(1, 1, 2);
  const ModelParams p{1, 1, 0.5};
  auto e = ExactEnsemble::enumerate(g, p);
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<BlockAssignment> as;
    for (int b = 0; b < 4; ++b) {
      if (rng() % 3) as.push_back({g.block_coord(b), BlockEvent::random(4, 0.5, rng)});
    }
    if (as.empty()) continue;
    const auto r = verify_chessboard(e, as);
    const double want = brute_prob(g, p, [&](const SpinConfig& c) {
      for (auto& a : as) {
        if (!block_in_event(g, c, a.coord, a.event)) return false;
      }
      return true;
    });
    EXPECT_NEAR(r.lhs, want, 1e-12);
    EXPECT_EQ(r.verdict, Verdict::Pass);
  }
}

TEST(Exact, Prop2Example) {
  auto g = ModelGeometry::cell_board(1, 1, 2);
  auto e = ExactEnsemble::enumerate(g, {1, 1, 2});
  const auto r = verify_prop2(e);
  EXPECT_EQ(r.verdict, Verdict::Pass);
  EXPECT_NEAR(r.rhs, 16 * std::exp(-3.0), 1e-12);
  EXPECT_NEAR(r.rhs, 0.7966, 1e-4);
  EXPECT_LE(r.lhs, r.rhs);
  EXPECT_EQ(r.detail["families"][0]["bad_patterns"], 14);
  EXPECT_EQ(r.detail["families"][0]["route"], "enumerated");

  auto e0 = ExactEnsemble::enumerate(g, {1, 1, 0});
  const auto r0 = verify_prop2(e0);
  EXPECT_EQ(r0.verdict, Verdict::Pass);
  EXPECT_LE(r0.lhs, 1 + 1e-12);

  auto hot = ExactEnsemble::enumerate(g, {1, 5, 1});
  EXPECT_EQ(verify_prop2(hot).verdict, Verdict::Vacuous);
}

TEST(Exact, Prop2DoubleBlocks) {
  auto g = ModelGeometry::cell_board(2, 1, 4);
  auto e = ExactEnsemble::transfer(g, {1, 0.5, 3});
  const auto r = verify_prop2(e);
  EXPECT_EQ(r.verdict, Verdict::Pass) << r.to_json().dump(1);
  EXPECT_EQ(r.detail["families"].size(), 3u);  // lambda, h1, h2
  for (const auto& f : r.detail["families"]) EXPECT_EQ(f["route"], "per-pattern sum");
}

TEST(Exact, LemmaPer) {
  auto g = ModelGeometry::cell_board(1, 1, 4);
  const ModelParams p{1, 1, 0};
  const auto r = verify_lemma_per(g, p, 15);
  EXPECT_DOUBLE_EQ(r.lhs, -32);
  EXPECT_DOUBLE_EQ(r.rhs, 4 * -8.0);
  EXPECT_EQ(r.verdict, Verdict::Pass);
  for (auto gg : {ModelGeometry::cell_board(1, 1, 4), ModelGeometry::cell_board(2, 1, 4)}) {
    for (std::uint64_t pat = 0; pat < (std::uint64_t{1} << gg.block_size()); ++pat) {
      EXPECT_EQ(verify_lemma_per(gg, {1, 0.7, 0}, pat).verdict, Verdict::Pass);
    }
  }
  // independent oracle: energy of the tiled configuration by coordinates
  // equals (N/2)^2 times the energy of its 2L1 x 2L2 window with wrap
  auto g32 = ModelGeometry::cell_board(3, 2, 4);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    const std::uint64_t pat = rng() & 0xff;
    const auto t = g32.tile_configuration(pat);
    const auto sub = g32.sub_torus_2x2();
    SpinConfig w = sub.make_config(-1);
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 6; ++x) w.set(Site{x, y}, t.at({x, y}));
    }
    EXPECT_DOUBLE_EQ(energy(g32, {1, 0.7, 0}, t), 4 * energy(sub, {1, 0.7, 0}, w));
    EXPECT_EQ(verify_lemma_per(g32, {1, 0.7, 0}, pat).verdict, Verdict::Pass);
  }
}

TEST(Exact, TwoPoint) {
  auto g = ModelGeometry::cell_board(1, 1, 4);
  const Site s{0, 0}, t{2, 0};
  auto e0 = ExactEnsemble::enumerate(g, {1, 1, 0});
  EXPECT_NEAR(two_point_probability(e0, s, t), 0.25, 1e-12);
  double prev = 1;
  for (double beta : {0.0, 1.0, 2.0, 4.0}) {
    auto e = ExactEnsemble::enumerate(g, {1, 1, beta});
    const double v = two_point_probability(e, s, t);
    const double brute = brute_prob(g, {1, 1, beta}, [&](const SpinConfig& c) { return c.at(s) == 1 && c.at(t) == -1; });
    EXPECT_NEAR(v, brute, 1e-12);
    EXPECT_LE(v, prev);
    prev = v;
  }
  EXPECT_THROW(two_point_probability(e0, s, s), ConfigError);
}
