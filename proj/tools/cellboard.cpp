// cellboard: verification suites, Monte Carlo runs and geometry dumps.
// Exit codes: 0 pass, 1 verification failure, 2 configuration or guard error.

#include <iostream>
#include <memory>
#include <random>

#include "CLI11.hpp"
#include "cellboard/cellboard.hpp"
#include "cellboard/cli_config.hpp"

using namespace cellboard;
using nlohmann::json;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

// Collects the flags that were actually given, as config keys.
class FlagSet {
 public:
  template <class T>
  CLI::Option* option(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto v = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *v, help);
    apply_.push_back([opt, v, key](json& j) {
      if (opt->count()) j[key] = *v;
    });
    return opt;
  }
  void flag(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto v = std::make_shared<bool>(false);
    CLI::Option* opt = app->add_flag(flag, *v, help);
    apply_.push_back([opt, v, key](json& j) {
      if (opt->count()) j[key] = *v;
    });
  }
  json collect() const {
    json j = json::object();
    for (const auto& f : apply_) f(j);
    return j;
  }

 private:
  std::vector<std::function<void(json&)>> apply_;
};

void add_common(CLI::App* app, FlagSet& f, std::string& config_path) {
  app->add_option("--config", config_path, "JSON configuration file; flags override it");
  f.option<std::string>(app, "--kind", "kind", "cellboard or strip");
  f.option<int>(app, "--L1", "L1", "cell width");
  f.option<int>(app, "--L2", "L2", "cell height");
  f.option<int>(app, "--L", "L", "strip height");
  f.option<int>(app, "--N", "N", "torus scale (cells per side, even)");
  f.option<double>(app, "--J", "J", "coupling J > 0");
  f.option<double>(app, "--h", "h", "field strength h >= 0");
  f.option<double>(app, "--beta", "beta", "inverse temperature");
  f.option<std::vector<double>>(app, "--betas", "betas", "list of inverse temperatures");
  f.option<std::vector<double>>(app, "--hs", "hs", "list of field strengths (scans)");
  f.option<double>(app, "--c", "c", "combinatorial constant in the bounds");
  f.option<double>(app, "--strip-k", "strip_k", "strip constant k for beta0");
  f.option<int>(app, "--trials", "trials", "random trials (chessboard, lemma-per)");
  f.option<std::uint64_t>(app, "--pattern", "pattern", "block pattern for lemma-per");
  f.option<std::vector<int>>(app, "--s", "s", "site s as t1 t2")->expected(2);
  f.option<std::vector<int>>(app, "--t", "t", "site t as t1 t2")->expected(2);
  f.option<std::uint64_t>(app, "--seed", "seed", "random seed");
  f.option<long>(app, "--sweeps", "sweeps", "Monte Carlo sweeps");
  f.option<long>(app, "--burn-in", "burn_in", "sweeps discarded before sampling");
  f.option<long>(app, "--thin", "thin", "sample every this many sweeps");
  f.option<std::string>(app, "--init", "init", "plus, minus, cellboard or random");
  f.option<int>(app, "--chains", "chains", "independent chains");
  f.option<int>(app, "--boundary", "boundary", "open box with this outside spin (+1 or -1)");
  f.flag(app, "--dat", "dat", "also write whitespace-delimited traces");
  f.option<long>(app, "--mc-sweeps", "mc_sweeps", "sweeps for the small-torus MC check");
  f.option<long>(app, "--coexistence-sweeps", "coexistence_sweeps", "sweeps for the 16 x 16 runs");
  f.option<std::string>(app, "--out", "out", "output JSON path");
  f.option<std::string>(app, "--out-dir", "out_dir", "output directory");
  f.option<int>(app, "--threads", "threads", "worker threads (0 = all cores)");
  f.flag(app, "--slow", "slow", "include slow-tier checks");
  f.option<int>(app, "--max-free", "max_free", "guard: free spins for enumeration");
  f.option<int>(app, "--max-tm-height", "max_tm_height", "guard: transfer-matrix height");
  f.option<int>(app, "--max-sweep-sites", "max_sweep_sites", "guard: sites in the Peierls sweep");
  f.option<int>(app, "--max-corollary-spins", "max_corollary_spins", "guard: spins in the antiferromagnet check");
}

bool all_ok(const std::vector<VerificationReport>& rs) {
  return std::all_of(rs.begin(), rs.end(), [](const auto& r) { return r.ok(); });
}

int emit_reports(const RunConfig& cfg, const std::string& stem, const std::vector<VerificationReport>& reports) {
  json list = json::array();
  for (const auto& r : reports) list.push_back(r.to_json());
  const bool ok = all_ok(reports);
  const json doc = {{"command", stem}, {"config", cfg.to_json()}, {"verdict", ok ? "pass" : "fail"}, {"reports", list}};
  const auto path = output_path(cfg, stem);
  write_atomic(path, doc.dump(2) + "\n");
  write_atomic(sibling(path, ".csv"), reports_csv(reports));
  for (const auto& r : reports) {
    std::cout << to_string(r.verdict) << "  " << r.name << "  " << r.lhs << ' ' << r.relation << ' ' << r.rhs << '\n';
  }
  std::cout << "wrote " << path.string() << '\n';
  return ok ? 0 : kExitFail;
}

ExactEnsemble ensemble(const RunConfig& cfg) {
  return ExactEnsemble::enumerate(cfg.geometry(), cfg.params(), {}, cfg.guards.max_free);
}

std::vector<VerificationReport> verify(const std::string& check, const RunConfig& cfg) {
  const ModelGeometry g = cfg.geometry();
  std::vector<VerificationReport> out;
  if (check == "rp") {
    const auto e = ensemble(cfg);
    for (const auto& pl : g.planes()) out.push_back(verify_rp(e, pl, cfg.seed));
  } else if (check == "chessboard") {
    const auto e = ensemble(cfg);
    std::mt19937_64 rng(cfg.seed);
    for (int k = 0; k < cfg.trials; ++k) {
      const auto as = random_assignments(g, rng);
      out.push_back(verify_chessboard(e, as));
    }
  } else if (check == "prop2") {
    out.push_back(verify_prop2(ensemble(cfg), cfg.c));
  } else if (check == "lemma-per") {
    const ModelParams p = cfg.params();
    if (cfg.pattern) {
      out.push_back(verify_lemma_per(g, p, *cfg.pattern));
    } else if (g.block_size() <= 12) {
      for (std::uint64_t pat = 0; pat < (std::uint64_t{1} << g.block_size()); ++pat) {
        out.push_back(verify_lemma_per(g, p, pat));
      }
    } else {
      std::mt19937_64 rng(cfg.seed);
      std::uniform_int_distribution<std::uint64_t> pick(0, (std::uint64_t{1} << g.block_size()) - 1);
      for (int k = 0; k < cfg.trials; ++k) out.push_back(verify_lemma_per(g, p, pick(rng)));
    }
  } else if (check == "lemma-hb") {
    ModelParams p{cfg.J, cfg.h, 0};
    p.validate();
    out.push_back(verify_lemma_hb(g.sub_torus_2x2(), p, cfg.guards.max_sweep_sites));
  } else if (check == "corollary1") {
    out.push_back(verify_corollary1(g, cfg.J, cfg.h, cfg.guards.max_corollary_spins));
  } else if (check == "ground-states") {
    const ModelGeometry sub = g.sub_torus_2x2();
    ModelParams p{cfg.J, cfg.h, 0};
    p.validate();
    const auto gs = classify_ground_states(sub, p);
    const double thr = theory_constants(sub, p).threshold;
    const double tol = 1e-12 * std::max(1.0, thr);
    const GroundStateClass want = cfg.h < thr - tol   ? GroundStateClass::PlusMinus
                                  : cfg.h > thr + tol ? GroundStateClass::Cell
                                                      : GroundStateClass::Degenerate;
    VerificationReport r;
    r.name = "ground-states";
    r.inputs = {{"geometry", sub.to_json()}, {"J", p.J}, {"h", p.h}, {"threshold", thr}};
    r.relation = "==";
    r.lhs = gs.min_energy;
    r.rhs = gs.min_energy;
    r.verdict = gs.label == want ? Verdict::Pass : Verdict::Fail;
    r.detail = {{"label", to_string(gs.label)},
                {"expected", to_string(want)},
                {"minimizer_count", gs.minimizer_count},
                {"minimizers", gs.minimizers}};
    out.push_back(r);
  } else if (check == "strip") {
    StripBatteryOptions opt;
    opt.seed = cfg.seed;
    opt.max_free = cfg.guards.max_free;
    out.push_back(verify_strip_model(g, cfg.params(), opt));
  } else if (check == "two-point") {
    const std::vector<double> betas = cfg.betas.empty() ? std::vector<double>{0, 1, 2, 4} : cfg.betas;
    ModelParams p{cfg.J, cfg.h, betas.front()};
    const auto e0 = ExactEnsemble::enumerate(g, p, {}, cfg.guards.max_free);
    const Site s = cfg.site_s(), t = cfg.site_t(g);
    double prev = INFINITY;
    for (double b : betas) {
      const double v = two_point_probability(e0.with_beta(b), s, t);
      const auto tc = theory_constants(g, {cfg.J, cfg.h, b}, cfg.c, cfg.strip_k);
      VerificationReport r;
      r.name = "two-point";
      r.inputs = {{"geometry", g.to_json()}, {"J", cfg.J}, {"h", cfg.h}, {"beta", b},
                  {"s", {s.t1, s.t2}},       {"t", {t.t1, t.t2}}};
      r.relation = "<=";
      r.lhs = v;
      r.rhs = two_point_bound(g, tc, b);
      r.tolerance = 1e-12;
      const bool mono = v <= prev * (1 + 1e-12);
      // decay is checked regardless; the bound only means something when c_P > 0
      r.verdict = !mono ? Verdict::Fail : !tc.peierls_holds() ? Verdict::Vacuous : v <= r.rhs ? Verdict::Pass : Verdict::Fail;
      r.detail = {{"non_increasing", mono}, {"previous", std::isfinite(prev) ? json(prev) : json(nullptr)}};
      out.push_back(r);
      prev = v;
    }
  } else {
    throw ConfigError("unknown check '" + check + "'");
  }
  return out;
}

// 8 x 4 torus: bad-block bounds for the block and every double-block family
// by full enumeration of 32 spins.
VerificationReport slow_lambda_star(const RunConfig& cfg) {
  const auto g = ModelGeometry::cell_board(2, 1, 4);
  const int max_free = std::max(cfg.guards.max_free, g.site_count());
  auto r = verify_prop2(ExactEnsemble::enumerate(g, {1, 1, 2}, {}, max_free), cfg.c);
  r.name = "bad-block bounds on 8 x 4, all families (slow)";
  return r;
}

int run_all(const RunConfig& cfg) {
  BatteryOptions opt;
  opt.slow = cfg.slow;
  opt.seed = cfg.seed;
  opt.mc_sweeps = cfg.mc_sweeps;
  opt.coexistence_sweeps = cfg.coexistence_sweeps;
  std::vector<VerificationReport> reports;
  for (const auto& entry : battery_entries()) {
    auto r = entry.run(opt);
    r.inputs["check"] = entry.id;
    std::cout << to_string(r.verdict) << "  " << entry.id << "  (" << r.seconds << " s)\n" << std::flush;
    reports.push_back(std::move(r));
  }
  if (cfg.slow) {
    reports.push_back(slow_lambda_star(cfg));
    std::cout << to_string(reports.back().verdict) << "  slow-lambda-star\n";
  }
  json list = json::array();
  for (const auto& r : reports) list.push_back(r.to_json());
  const bool ok = all_ok(reports);
  const json doc = {{"command", "run-all"}, {"config", cfg.to_json()}, {"verdict", ok ? "pass" : "fail"},
                    {"checks", reports.size()}, {"reports", list}};
  const auto path = output_path(cfg, "run_all");
  write_atomic(path, doc.dump(2) + "\n");
  write_atomic(sibling(path, ".csv"), reports_csv(reports));
  std::cout << "wrote " << path.string() << '\n';
  return ok ? 0 : kExitFail;
}

int mc_run(const RunConfig& cfg) {
  std::vector<ChainSpec> specs;
  for (int k = 0; k < cfg.chains; ++k) {
    ChainSpec s = cfg.chain_spec();
    s.chain = static_cast<std::uint32_t>(k);
    specs.push_back(std::move(s));
  }
  const auto traces = run_chains(specs);
  const auto path = output_path(cfg, "mc_run");
  json chains = json::array();
  for (std::size_t k = 0; k < traces.size(); ++k) {
    const auto& tr = traces[k];
    const auto sm = series_stats(tr.m);
    const auto sh = series_stats(tr.energy);
    auto stem = path;
    stem.replace_extension();
    const std::string suffix = traces.size() > 1 ? "_chain" + std::to_string(k) : "";
    const std::filesystem::path csv = stem.string() + suffix + ".csv";
    write_atomic(csv, tr.csv());
    if (cfg.dat) write_atomic(stem.string() + suffix + ".dat", tr.dat());
    chains.push_back({{"spec", specs[k].to_json()},
                      {"trace", csv.filename().string()},
                      {"samples", tr.size()},
                      {"acceptance", tr.acceptance},
                      {"mean_m", sm.mean},
                      {"se_m", sm.std_error},
                      {"tau_m", sm.tau_int},
                      {"mean_H", sh.mean},
                      {"se_H", sh.std_error},
                      {"tau_H", sh.tau_int}});
    std::cout << "chain " << k << ": <m> = " << sm.mean << " +- " << sm.std_error << ", <H> = " << sh.mean << " +- "
              << sh.std_error << '\n';
  }
  const json doc = {{"command", "mc run"}, {"config", cfg.to_json()}, {"chains", chains}};
  write_atomic(path, doc.dump(2) + "\n");
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int mc_scan(const RunConfig& cfg) {
  const ChainSpec base = cfg.chain_spec();
  const std::vector<double> betas = cfg.betas.empty() ? std::vector<double>{cfg.beta} : cfg.betas;
  const std::vector<double> hs = cfg.hs.empty() ? std::vector<double>{cfg.h} : cfg.hs;
  std::vector<ScanPoint> grid;
  for (double b : betas) {
    for (double h : hs) grid.push_back({b, h});
  }
  const auto res = coexistence_scan(base.geom, grid, base);
  const auto path = output_path(cfg, "mc_scan");
  json manifest = res.manifest;
  manifest["command"] = "mc scan";
  manifest["effective_config"] = cfg.to_json();
  write_atomic(sibling(path, ".csv"), res.csv());
  write_atomic(path, manifest.dump(2) + "\n");
  std::cout << res.csv() << "wrote " << path.string() << '\n';
  return 0;
}

int geometry_dump(const RunConfig& cfg) {
  const ModelGeometry g = cfg.geometry();
  json field = json::array();
  for (int y = g.height() - 1; y >= 0; --y) {
    std::string row;
    for (int x = 0; x < g.width(); ++x) row += g.field_sign(g.index({x, y})) > 0 ? '+' : '-';
    field.push_back(row);
  }
  json planes = json::array();
  for (const auto& pl : g.planes()) planes.push_back({{"axis", pl.axis}, {"twice_offset", pl.twice_offset}});
  json blocks = json::array();
  for (int b = 0; b < g.block_count(); ++b) {
    json sites = json::array();
    for (Site s : g.block_sites(g.block_coord(b))) sites.push_back({s.t1, s.t2});
    blocks.push_back({{"n", g.block_coord(b).n}, {"m", g.block_coord(b).m}, {"sites", sites}});
  }
  ModelParams p{cfg.J, cfg.h, cfg.beta};
  p.validate();
  const json doc = {{"command", "geometry dump"},
                    {"config", cfg.to_json()},
                    {"geometry", g.to_json()},
                    {"field_rows_top_down", field},
                    {"planes", planes},
                    {"blocks", blocks},
                    {"theory", theory_constants(g, p, cfg.c, cfg.strip_k).to_json()}};
  const auto path = output_path(cfg, "geometry");
  write_atomic(path, doc.dump(2) + "\n");
  for (const auto& row : field) std::cout << row.get<std::string>() << '\n';
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cell-board Ising model: exact checks and Monte Carlo"};
  // -h is taken by the field strength
  app.set_help_flag("--help", "print help and exit");
  app.require_subcommand(1);
  FlagSet flags;
  std::string config_path;
  std::string check;

  auto* verify_cmd = app.add_subcommand("verify", "run one verification suite");
  verify_cmd->add_option("check", check, "suite")
      ->required()
      ->check(CLI::IsMember({"rp", "chessboard", "prop2", "lemma-per", "lemma-hb", "corollary1", "ground-states", "strip",
                             "two-point"}));
  add_common(verify_cmd, flags, config_path);

  auto* all_cmd = app.add_subcommand("run-all", "run the full verification battery");
  add_common(all_cmd, flags, config_path);

  auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo");
  mc_cmd->require_subcommand(1);
  auto* mc_run_cmd = mc_cmd->add_subcommand("run", "run chains and write traces");
  add_common(mc_run_cmd, flags, config_path);
  auto* mc_scan_cmd = mc_cmd->add_subcommand("scan", "coexistence scan over a (beta, h) grid");
  add_common(mc_scan_cmd, flags, config_path);

  auto* geo_cmd = app.add_subcommand("geometry", "geometry tools");
  geo_cmd->require_subcommand(1);
  auto* dump_cmd = geo_cmd->add_subcommand("dump", "field pattern, blocks and planes");
  add_common(dump_cmd, flags, config_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    const json file = config_path.empty() ? json::object() : load_config_file(config_path);
    const RunConfig cfg = effective_config(file, flags.collect());
    set_thread_count(cfg.threads);
    if (verify_cmd->parsed()) return emit_reports(cfg, "verify_" + check, verify(check, cfg));
    if (all_cmd->parsed()) return run_all(cfg);
    if (mc_run_cmd->parsed()) return mc_run(cfg);
    if (mc_scan_cmd->parsed()) return mc_scan(cfg);
    if (dump_cmd->parsed()) return geometry_dump(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const GuardError& e) {
    std::cerr << "guard: " << e.what() << " (raise it with the matching --max-* flag)\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
