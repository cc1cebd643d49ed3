#include "config.hpp"

#include "rk/cost.hpp"
#include "rk/hybrid.hpp"
#include "rk/io.hpp"
#include "rk/problems.hpp"
#include "rk/rng.hpp"
#include "rk/sketch.hpp"
#include "rk/solvers.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using rkcli::Config;
using rkcli::ConfigError;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Context {
  Config cfg;
  fs::path out;
  std::uint64_t seed = 0;
};

rk::InverseProblem build_problem(const Config& cfg, std::uint64_t seed) {
  const std::string kind = cfg.get_str("problem.kind");
  const std::uint64_t pseed = cfg.get_u64("problem.seed", seed);
  if (kind == "blur") {
    return rk::make_blur_problem(
        static_cast<int>(cfg.get_int("problem.side")),
        cfg.get_double("problem.psf_width", 1.0),
        cfg.get_double("problem.noise_level", 0.0), pseed);
  }
  if (kind == "tomo") {
    const int side = static_cast<int>(cfg.get_int("problem.side"));
    const long long rays =
        cfg.get_int("problem.num_rays", 2LL * side * side);
    return rk::make_tomo_problem(side, static_cast<int>(rays),
                                 cfg.get_double("problem.noise_level", 0.0),
                                 pseed);
  }
  if (kind == "files") {
    rk::InverseProblem p;
    p.op = rk::make_sparse_operator(
        rk::load_matrix_market(cfg.get_str("problem.matrix")));
    p.b = rk::load_vector(cfg.get_str("problem.rhs"));
    if (p.b.size() != p.op.rows())
      throw ConfigError("problem.rhs length does not match the matrix");
    if (cfg.has("problem.x_true"))
      p.x_true = rk::load_vector(cfg.get_str("problem.x_true"));
    if (cfg.has("problem.noise_norm"))
      p.noise_norm = cfg.get_double("problem.noise_norm");
    return p;
  }
  throw ConfigError("problem.kind must be blur, tomo or files, got: " + kind);
}

rk::SolverConfig build_solver(const Config& cfg, std::uint64_t seed) {
  rk::SolverConfig sc;
  try {
    sc.method = rk::method_from_string(cfg.get_str("solver.method", "rlsqr"));
    sc.sketch_kind = rk::sketch_kind_from_string(
        cfg.get_str("solver.sketch", "gaussian"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  sc.max_iters = cfg.get_int("solver.max_iters", 50);
  if (sc.max_iters < 1) throw ConfigError("solver.max_iters must be >= 1");
  if (cfg.has("solver.ell_n")) sc.ell_n = cfg.get_int("solver.ell_n");
  if (cfg.has("solver.ell_m")) sc.ell_m = cfg.get_int("solver.ell_m");
  sc.seed = cfg.get_u64("solver.seed", seed);
  sc.breakdown_tol = cfg.get_double("solver.breakdown_tol", 1e-14);
  sc.record_true_residuals =
      cfg.get_bool("solver.record_true_residuals", false);
  sc.gs.resketch = cfg.get_bool("solver.resketch", false);
  sc.gs.ls_coefficients = cfg.get_bool("solver.ls_coefficients", false);
  sc.gs.second_pass = cfg.get_bool("solver.second_pass", false);
  return sc;
}

std::optional<rk::RegRule> build_rule(const Config& cfg) {
  const std::string kind = cfg.get_str("rule.kind", "none");
  if (kind == "none") return std::nullopt;
  rk::RegRule rule;
  try {
    rule.kind = rk::rule_kind_from_string(kind);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  rule.lambda = cfg.get_double("rule.lambda", 0.0);
  rule.tau = cfg.get_double("rule.tau", 1.01);
  rule.w = cfg.get_double("rule.w", 1.0);
  rule.lambda_min = cfg.get_double("rule.lambda_min", 1e-10);
  rule.lambda_max = cfg.get_double("rule.lambda_max", 1e4);
  if (rule.kind == rk::RegRule::Kind::dp && rule.tau <= 1.0)
    throw ConfigError("rule.tau must be > 1 for the discrepancy principle");
  return rule;
}

rk::SolveResult run_one(const rk::InverseProblem& problem,
                        const rk::SolverConfig& sc,
                        const std::optional<rk::RegRule>& rule) {
  return rule ? rk::hybrid_solve(problem, sc, *rule) : rk::solve(problem, sc);
}

/// Measured embedding quality of theta_n on the orthonormalized solution
/// basis; desk-scale diagnostic only.
std::optional<double> measured_epsilon(const rk::SolveResult& res,
                                       const rk::InverseProblem& problem,
                                       const rk::SolverConfig& sc) {
  if (sc.sketch_kind == rk::SketchKind::identity) return 0.0;
  const rk::Matrix* basis = nullptr;
  if (res.gk && res.gk->vcols > 0) basis = &res.gk->V;
  if (res.arnoldi && res.arnoldi->basis_cols > 0) basis = &res.arnoldi->Q;
  if (!basis) return std::nullopt;
  const rk::Index cols = res.gk ? res.gk->vcols : res.arnoldi->basis_cols;
  const rk::Matrix thin = basis->leftCols(cols);
  Eigen::HouseholderQR<rk::Matrix> qr(thin);
  const rk::Matrix q =
      qr.householderQ() * rk::Matrix::Identity(thin.rows(), cols);
  const rk::SketchDims dims =
      rk::resolve_sketch_dims(sc, problem.op.rows(), problem.op.cols());
  const rk::SketchOperator theta = rk::SketchOperator::make(
      sc.sketch_kind, problem.op.cols(), dims.ell_n,
      rk::derive_seed(sc.seed, "theta_n"));
  return rk::measure_epsilon(theta, q);
}

void write_meta(const Context& ctx, const std::string& command,
                const rk::SolveResult* res, std::optional<double> eps_hat,
                const std::string& error = {}) {
  json meta;
  meta["command"] = command;
  meta["version"] = "0.1.0";
  meta["seed"] = ctx.seed;
  json cfgj = json::object();
  for (const auto& [k, v] : ctx.cfg.entries()) cfgj[k] = v;
  meta["config"] = cfgj;
  if (res) {
    meta["iterations"] = res->iterations();
    meta["breakdown"] = res->breakdown;
    meta["warnings"] = res->warnings;
  }
  if (eps_hat) meta["epsilon_hat"] = *eps_hat;
  if (!error.empty()) meta["error"] = error;
  std::ofstream os(ctx.out / "meta.json");
  os << meta.dump(2) << '\n';
}

void write_solution(const fs::path& dir, const rk::SolveResult& res) {
  for (rk::Index k = res.iterations(); k >= 1; --k) {
    if (res.z[static_cast<std::size_t>(k - 1)].size() > 0) {
      rk::save_vector((dir / "solution.txt").string(), res.solution_at(k));
      return;
    }
  }
}

double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double idx = p * (static_cast<double>(v.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(std::floor(idx));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(idx));
  const double frac = idx - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

void write_stats(const fs::path& path,
                 const std::vector<rk::IterationHistory>& histories) {
  std::size_t max_rows = 0;
  for (const auto& h : histories) max_rows = std::max(max_rows, h.rows.size());
  std::ofstream os(path);
  os << "k,rel_error_q25,rel_error_median,rel_error_q75,"
        "sketched_residual_q25,sketched_residual_median,sketched_residual_q75\n";
  for (std::size_t r = 0; r < max_rows; ++r) {
    std::vector<double> errs, ress;
    for (const auto& h : histories) {
      if (r >= h.rows.size()) continue;
      if (!std::isnan(h.rows[r].rel_error)) errs.push_back(h.rows[r].rel_error);
      if (!std::isnan(h.rows[r].sketched_residual))
        ress.push_back(h.rows[r].sketched_residual);
    }
    auto cell = [](double v) {
      return std::isnan(v) ? std::string() : rk::format_double(v);
    };
    os << (r + 1) << ',' << cell(percentile(errs, 0.25)) << ','
       << cell(percentile(errs, 0.5)) << ',' << cell(percentile(errs, 0.75))
       << ',' << cell(percentile(ress, 0.25)) << ','
       << cell(percentile(ress, 0.5)) << ',' << cell(percentile(ress, 0.75))
       << '\n';
  }
}

int cmd_solve(const Context& ctx) {
  const rk::InverseProblem problem = build_problem(ctx.cfg, ctx.seed);
  const rk::SolverConfig sc = build_solver(ctx.cfg, ctx.seed);
  const std::optional<rk::RegRule> rule = build_rule(ctx.cfg);
  const long long reps = ctx.cfg.get_int("repetitions", 1);
  if (reps < 1) throw ConfigError("repetitions must be >= 1");

  fs::create_directories(ctx.out);
  if (reps == 1) {
    const rk::SolveResult res = run_one(problem, sc, rule);
    res.history.write_csv((ctx.out / "history.csv").string());
    write_solution(ctx.out, res);
    std::optional<double> eps;
    if (ctx.cfg.get_bool("output.measure_epsilon", false))
      eps = measured_epsilon(res, problem, sc);
    write_meta(ctx, "solve", &res, eps);
    return kExitOk;
  }

  std::vector<rk::IterationHistory> histories;
  for (long long r = 0; r < reps; ++r) {
    rk::SolverConfig rc = sc;
    rc.seed = rk::derive_seed(sc.seed, "rep" + std::to_string(r));
    const rk::SolveResult res = run_one(problem, rc, rule);
    char name[32];
    std::snprintf(name, sizeof(name), "rep_%03lld", r);
    const fs::path sub = ctx.out / name;
    fs::create_directories(sub);
    res.history.write_csv((sub / "history.csv").string());
    histories.push_back(res.history);
  }
  write_stats(ctx.out / "stats.csv", histories);
  write_meta(ctx, "solve", nullptr, std::nullopt);
  return kExitOk;
}

int cmd_sweep(const Context& ctx) {
  const std::string axis = ctx.cfg.get_str("sweep.axis");
  if (axis != "ell" && axis != "lambda")
    throw ConfigError("sweep.axis must be ell or lambda");
  const std::vector<double> values = ctx.cfg.get_double_list("sweep.values");
  if (values.empty()) throw ConfigError("sweep.values must be non-empty");

  const rk::InverseProblem problem = build_problem(ctx.cfg, ctx.seed);
  fs::create_directories(ctx.out);
  std::ofstream combined(ctx.out / "sweep.csv");
  combined << "setting," << rk::kHistoryCsvHeader << '\n';

  for (const double value : values) {
    Config cfg = ctx.cfg;
    std::string label;
    if (axis == "ell") {
      if (value < 1.0 || value != std::floor(value))
        throw ConfigError("ell sweep values must be positive integers");
      const std::string ell = std::to_string(static_cast<long long>(value));
      cfg.set("solver.ell_n", ell);
      cfg.set("solver.ell_m", ell);
      label = "ell_" + ell;
    } else {
      cfg.set("rule.kind", "fixed");
      cfg.set("rule.lambda", rk::format_double(value));
      label = "lambda_" + rk::format_double(value);
    }
    const rk::SolverConfig sc = build_solver(cfg, ctx.seed);
    const std::optional<rk::RegRule> rule = build_rule(cfg);
    const rk::SolveResult res = run_one(problem, sc, rule);
    const fs::path sub = ctx.out / label;
    fs::create_directories(sub);
    res.history.write_csv((sub / "history.csv").string());
    write_solution(sub, res);

    std::ostringstream hist;
    res.history.write_csv(hist);
    std::istringstream lines(hist.str());
    std::string line;
    std::getline(lines, line);  // drop per-setting header
    while (std::getline(lines, line))
      combined << rk::format_double(value) << ',' << line << '\n';
  }
  write_meta(ctx, "sweep", nullptr, std::nullopt);
  return kExitOk;
}

int cmd_svdapprox(const Context& ctx) {
  const rk::InverseProblem problem = build_problem(ctx.cfg, ctx.seed);
  const rk::LinearOperator& A = problem.op;
  if (static_cast<double>(A.rows()) * static_cast<double>(A.cols()) > 1e7)
    throw ConfigError("svdapprox needs a desk-scale problem (m*n <= 1e7)");
  std::vector<rk::Index> ks;
  for (const long long k : ctx.cfg.get_int_list("svdapprox.ks")) {
    if (k < 1) throw ConfigError("svdapprox.ks entries must be >= 1");
    ks.push_back(static_cast<rk::Index>(k));
  }
  if (ks.empty()) throw ConfigError("svdapprox.ks must be non-empty");
  const rk::Index kmax = *std::max_element(ks.begin(), ks.end());

  rk::SolverConfig sc = build_solver(ctx.cfg, ctx.seed);
  sc.max_iters = std::max(sc.max_iters, kmax);
  const rk::SketchDims dims = rk::resolve_sketch_dims(sc, A.rows(), A.cols());
  const rk::SketchOperator theta_n = rk::SketchOperator::make(
      sc.sketch_kind, A.cols(), dims.ell_n, rk::derive_seed(sc.seed, "theta_n"));
  const rk::SketchOperator theta_m = rk::SketchOperator::make(
      sc.sketch_kind, A.rows(), dims.ell_m, rk::derive_seed(sc.seed, "theta_m"));
  rk::GKFactorization f =
      rk::rgk_init(A, problem.b, theta_n, theta_m, kmax, sc.breakdown_tol);
  for (rk::Index k = 0; k < kmax && !f.breakdown; ++k)
    rk::rgk_step(f, A, theta_n, theta_m, sc.gs);
  ks.erase(std::remove_if(ks.begin(), ks.end(),
                          [&](rk::Index k) { return k > f.k; }),
           ks.end());

  fs::create_directories(ctx.out);
  rk::write_csv(rk::svd_approx_report(f, A, ks),
                (ctx.out / "svdapprox.csv").string());
  write_meta(ctx, "svdapprox", nullptr, std::nullopt);
  return kExitOk;
}

int cmd_flops(const Context& ctx) {
  const double m = ctx.cfg.get_double("flops.m", 1e4);
  const double n = ctx.cfg.get_double("flops.n", 1e4);
  const double cmv = ctx.cfg.get_double("flops.cmv", 10.0 * (m + n));

  fs::create_directories(ctx.out);
  std::ofstream os(ctx.out / "flops.csv");
  os << "panel,K,ell_n,ell_m,flops_rgk,flops_gkb,flops_rogkb\n";

  auto emit = [&](const char* panel, double K, double ell_n, double ell_m) {
    rk::CostParams p;
    p.m = m;
    p.n = n;
    p.K = K;
    p.ell_n = ell_n;
    p.ell_m = ell_m;
    p.C_mv = cmv;
    p.C_sk_n = rk::srht_sketch_cost(n, ell_n);
    p.C_sk_m = rk::srht_sketch_cost(m, ell_m);
    os << panel << ',' << rk::format_double(K) << ','
       << rk::format_double(ell_n) << ',' << rk::format_double(ell_m) << ','
       << rk::format_double(rk::flops_rgk(p)) << ','
       << rk::format_double(rk::flops_gkb(p)) << ','
       << rk::format_double(rk::flops_rogkb(p)) << '\n';
  };

  // K sweeps: 20 log-spaced iteration counts in [10, 5000].
  std::vector<double> Ks;
  for (int i = 0; i < 20; ++i) {
    const double K = std::round(
        std::exp(std::log(10.0) +
                 (std::log(5000.0) - std::log(10.0)) * i / 19.0));
    if (Ks.empty() || K != Ks.back()) Ks.push_back(K);
  }
  for (const double K : Ks) {
    rk::EmbeddingSpec spec;
    spec.eps = 0.5;
    spec.delta = 0.5;
    spec.max_dim = static_cast<rk::Index>(K) + 1;
    spec.ambient_dim = static_cast<rk::Index>(n);
    const double ell_a =
        static_cast<double>(rk::embedding_dim_theory(spec).ell);
    emit("a", K, ell_a, ell_a);
    const double ell_b = static_cast<double>(rk::embedding_dim_default(
        static_cast<rk::Index>(n), static_cast<rk::Index>(K)));
    emit("b", K, ell_b, ell_b);
  }
  // ell sweeps at K = 100 and K = 500.
  for (const auto& [panel, K] :
       std::vector<std::pair<const char*, double>>{{"c", 100.0}, {"d", 500.0}}) {
    for (int i = 0; i < 20; ++i) {
      const double ell = std::round(
          std::exp(std::log(K + 1.0) +
                   (std::log(n) - std::log(K + 1.0)) * i / 19.0));
      emit(panel, K, ell, ell);
    }
  }
  write_meta(ctx, "flops", nullptr, std::nullopt);
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized Krylov solvers for discrete inverse problems"};
  app.require_subcommand(1);
  app.fallthrough(true);  // accept shared flags after the subcommand name

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed_flag = 0;
  bool seed_given = false;
  int threads = 0;

  app.add_option("--config", config_path, "configuration file")
      ->required()
      ->each([](const std::string&) {});
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed_flag, "master RNG seed (overrides config)")
      ->each([&seed_given](const std::string&) { seed_given = true; });
  app.add_option("--threads", threads, "Eigen thread count");

  CLI::App* solve = app.add_subcommand("solve", "run one solve");
  CLI::App* sweep = app.add_subcommand("sweep", "sweep ell or lambda");
  CLI::App* svdapprox =
      app.add_subcommand("svdapprox", "projected singular-value study");
  CLI::App* flops = app.add_subcommand("flops", "flop-model tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (threads > 0) Eigen::setNbThreads(threads);

  try {
    Context ctx;
    ctx.cfg = Config::parse_file(config_path);
    ctx.out = out_dir;
    ctx.seed = seed_given ? seed_flag : ctx.cfg.get_u64("seed", 0);
    if (seed_given) ctx.cfg.set("seed", std::to_string(seed_flag));

    if (solve->parsed()) return cmd_solve(ctx);
    if (sweep->parsed()) return cmd_sweep(ctx);
    if (svdapprox->parsed()) return cmd_svdapprox(ctx);
    if (flops->parsed()) return cmd_flops(ctx);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
}
