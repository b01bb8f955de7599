#include "ksnno/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "CLI11.hpp"
#include "ksnno/experiments.hpp"
#include "ksnno/output.hpp"
#include "ksnno/parallel.hpp"

namespace ksnno::cli {
namespace {

struct Options {
  std::string activation = "logistic";
  std::string kernel = "example-t2s";
  std::string n;
  int m = 0;
  std::optional<int> paths;
  std::uint64_t seed = 20240521;
  std::string fixture;
  std::string out = "out";
  int workers = 1;
  std::string t_grid;
  std::optional<double> tolerance;
};

// Configuration problems detected after parsing; mapped to exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string now_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(now));
}

struct Context {
  Options opt;
  std::string command;
  std::ostream& out;
  std::string started = now_utc();

  Density2D density() const { return Density2D(Density1D(Activation::from_name(opt.activation))); }
  Kernel2D kernel() const { return kernel_from_spec(opt.kernel); }

  std::vector<int> ns(const std::string& fallback) const {
    return parse_int_list(opt.n.empty() ? fallback : opt.n);
  }
  int single_n(int fallback) const {
    if (opt.n.empty()) return fallback;
    const std::vector<int> v = parse_int_list(opt.n);
    if (v.size() != 1) throw UsageError(fmt::format("'{}' takes a single --n value", command));
    return v.front();
  }
  std::vector<double> t_grid(const std::string& fallback) const {
    return parse_t_grid(opt.t_grid.empty() ? fallback : opt.t_grid);
  }
  int paths(int fallback) const { return opt.paths.value_or(fallback); }
  double tolerance(double fallback) const { return opt.tolerance.value_or(fallback); }

  RunManifest manifest() const {
    RunManifest m;
    m.command = command;
    m.version = code_version();
    m.master_seed = opt.seed;
    m.started = started;
    m.config = {{"activation", opt.activation}, {"kernel", opt.kernel},     {"n", opt.n},
                {"m", std::to_string(opt.m)},   {"paths", opt.paths ? std::to_string(*opt.paths) : ""},
                {"seed", std::to_string(opt.seed)}, {"fixture", opt.fixture}, {"workers", std::to_string(opt.workers)},
                {"t_grid", opt.t_grid},          {"tolerance", opt.tolerance ? format_number(*opt.tolerance) : ""}};
    return m;
  }

  void finish(OutputBundle& bundle, RunManifest manifest) const {
    manifest.finished = now_utc();
    manifest.file_digests = bundle.digests();
    bundle.add("manifest.json", manifest.to_json());
    bundle.commit(opt.out);
  }
};

int run_table1(const Context& ctx) {
  if (ctx.opt.kernel != "example-t2s") throw UsageError("table1 reproduces the example-t2s kernel only");
  const IncrementFixture fixture = ctx.opt.fixture.empty() ? embedded_table1_fixture() : load_fixture(ctx.opt.fixture);
  const int n = ctx.single_n(20);
  const double tol = ctx.tolerance(2.5e-3);
  const Table1Report report = reproduce_table1(fixture, n, ctx.density());

  CsvWriter csv({"t", "dW", "W", "X", "Xn", "abs_err", "sq_err"});
  for (const Table1Row& r : report.rows) csv.add_row({r.t, r.dW, r.W, r.X, r.Xn, r.abs_err, r.sq_err});
  OutputBundle bundle;
  bundle.add("table1.csv", csv.str());

  RunManifest manifest = ctx.manifest();
  manifest.results["time_rule"] = to_string(report.rule);
  for (const auto& [rule, dev] : report.rule_max_deviation) manifest.results["x_deviation_" + rule] = format_number(dev);
  for (const ColumnDeviation& d : report.deviations) {
    manifest.results["max_deviation_" + d.column] = format_number(d.max_abs);
  }
  manifest.results["reference_consistency"] = format_number(report.reference_consistency);
  ctx.finish(bundle, manifest);

  const double x_dev = report.deviation("X").max_abs;
  ctx.out << fmt::format("table1: rule={} X max deviation {:.3e} (tolerance {:.3e}), Xn max deviation {:.3e}\n",
                         to_string(report.rule), x_dev, tol, report.deviation("Xn").max_abs);
  return x_dev <= tol ? kExitOk : kExitToleranceFailure;
}

int run_mse_sweep(const Context& ctx) {
  const Kernel2D kernel = ctx.kernel();
  const std::vector<int> ns = ctx.ns("5,10,20,40,80");
  KSnnoConfig cfg;
  cfg.m = ctx.opt.m;
  cfg.paths = ctx.paths(200);
  cfg.master_seed = ctx.opt.seed;
  cfg.workers = ctx.opt.workers;
  cfg.t_grid = ctx.t_grid("0:1:101");
  for (int n : ns) {
    KSnnoConfig probe = cfg;
    probe.n = n;
    probe.validate(kernel.domain);
  }
  if (cfg.paths < 2) throw UsageError("mse-sweep needs --paths >= 2");
  const double tol = ctx.tolerance(0.15);
  const MseReport report = mse_sweep(kernel, ctx.density(), ns, cfg, tol);

  CsvWriter summary({"n", "m", "mse_mc", "mse_se", "oracle_d", "oracle_d_fine", "isometry_gap", "gap_checked"});
  CsvWriter pointwise({"n", "t", "mse_mc", "mse_se", "oracle_d"});
  SvgSeries mc{"Monte-Carlo MSE", {}}, oracle{"L2 oracle D(n)", {}};
  for (const MseEntry& e : report.entries) {
    summary.add_row({static_cast<double>(e.n), static_cast<double>(e.steps), e.mse_mc, e.mse_se, e.oracle_d,
                     e.oracle_d_fine, e.isometry_gap, e.gap_checked ? 1.0 : 0.0});
    for (const MsePointwise& p : e.pointwise) {
      pointwise.add_row({static_cast<double>(e.n), p.t, p.mse, p.standard_error, p.oracle});
    }
    mc.points.emplace_back(e.n, e.mse_mc);
    oracle.points.emplace_back(e.n, e.oracle_d);
  }
  OutputBundle bundle;
  bundle.add("mse_sweep.csv", summary.str());
  bundle.add("mse_pointwise.csv", pointwise.str());
  bundle.add("mse_sweep.svg", svg_loglog_plot("MSE vs n", {mc, oracle}));

  RunManifest manifest = ctx.manifest();
  if (report.fit.points >= 3) {
    manifest.results["slope"] = format_number(report.fit.slope);
    manifest.results["slope_r_squared"] = format_number(report.fit.r_squared);
    manifest.results["slope_oracle"] = format_number(report.fit_oracle.slope);
    manifest.results["slope_oracle_doubled_resolution"] = format_number(report.fit_oracle_fine.slope);
    if (report.fit_mc.points >= 3) manifest.results["slope_monte_carlo"] = format_number(report.fit_mc.slope);
  }
  manifest.results["oracle_strictly_decreasing"] = report.oracle_strictly_decreasing() ? "true" : "false";
  manifest.results["isometry_tolerance"] = format_number(tol);
  ctx.finish(bundle, manifest);

  for (const MseEntry& e : report.entries) {
    ctx.out << fmt::format("n={:4d} mse={:.4e} se={:.2e} D={:.4e} gap={:.3f}{}\n", e.n, e.mse_mc, e.mse_se,
                           e.oracle_d, e.isometry_gap, e.gap_checked ? "" : " (unchecked)");
  }
  if (report.fit.points >= 3) ctx.out << fmt::format("fitted log-log slope {:.4f}\n", report.fit.slope);
  return report.all_gaps_pass() ? kExitOk : kExitToleranceFailure;
}

int run_covariance(const Context& ctx) {
  const Kernel2D kernel = ctx.kernel();
  const int paths = ctx.paths(10000);
  if (paths < 1000) throw UsageError("covariance needs --paths >= 1000");
  const int m = ctx.opt.m > 0 ? ctx.opt.m : 2000;
  if (m < 2) throw UsageError("--m must be >= 2");
  const std::vector<double> ts = ctx.t_grid("0,0.25,0.5,0.75,1");
  for (double t : ts) {
    if (!kernel.domain.contains(t)) throw UsageError(fmt::format("t = {} outside the kernel domain", t));
  }
  const CovarianceReport report = covariance_check(kernel, paths, ctx.opt.seed, ts, m, ctx.opt.workers);

  CsvWriter csv({"t", "s", "empirical", "standard_error", "analytic", "within_3se"});
  for (const CovarianceEntry& e : report.entries) {
    csv.add_row({e.t, e.s, e.empirical, e.standard_error, e.analytic, e.within_3se ? 1.0 : 0.0});
  }
  OutputBundle bundle;
  bundle.add("covariance.csv", csv.str());
  RunManifest manifest = ctx.manifest();
  manifest.results["all_within_3se"] = report.all_within() ? "true" : "false";
  ctx.finish(bundle, manifest);
  ctx.out << fmt::format("covariance: {} entries, all within 3 SE: {}\n", report.entries.size(), report.all_within());
  return report.all_within() ? kExitOk : kExitToleranceFailure;
}

int run_neuron_check(const Context& ctx) {
  const Density2D d2 = ctx.density();
  const std::vector<int> ns = ctx.ns("20");
  const std::vector<double> ts = ctx.t_grid("0.25,0.5,0.75");
  const int paths = ctx.paths(2000);
  if (paths < 100) throw UsageError("neuron-check needs --paths >= 100");
  const Interval domain{0.0, 1.0};
  for (int n : ns) {
    if (n < 2) throw UsageError(fmt::format("n = {} must be >= 2", n));
    index_range(n, domain);
  }
  for (double t : ts) {
    if (!domain.contains(t)) throw UsageError(fmt::format("t = {} outside [0, 1]", t));
  }

  CsvWriter csv({"n", "j", "t", "mean", "mean_se", "second_moment", "second_moment_se", "quadrature_moment", "bound",
                 "within_bound"});
  bool all_within = true;
  for (int n : ns) {
    const IndexRange range = index_range(n, domain);
    for (double t : ts) {
      // Neurons centred within two lattice steps of nt.
      const long centre = std::lround(n * t);
      for (long j = std::max(range.first, centre - 2); j <= std::min(range.last, centre + 2); ++j) {
        const NeuronMomentReport r =
            neuron_second_moment_check(d2, n, j, t, paths, ctx.opt.seed, domain, ctx.opt.m, ctx.opt.workers);
        all_within = all_within && r.within_bound;
        csv.add_row({static_cast<double>(n), static_cast<double>(j), t, r.mean, r.mean_se, r.second_moment,
                     r.second_moment_se, r.quadrature_moment, r.bound, r.within_bound ? 1.0 : 0.0});
      }
    }
  }
  OutputBundle bundle;
  bundle.add("neuron_check.csv", csv.str());
  RunManifest manifest = ctx.manifest();
  manifest.results["all_within_bound"] = all_within ? "true" : "false";
  ctx.finish(bundle, manifest);
  ctx.out << fmt::format("neuron-check: all within bound: {}\n", all_within);
  return all_within ? kExitOk : kExitToleranceFailure;
}

int run_kantorovich_error(const Context& ctx) {
  const Kernel2D kernel = ctx.kernel();
  const Density2D d2 = ctx.density();
  const std::vector<int> ns = ctx.ns("5,10,20,40,80");
  const std::vector<double> ts = ctx.t_grid("0.25,0.5,0.75");
  for (int n : ns) {
    if (n < 2) throw UsageError(fmt::format("n = {} must be >= 2", n));
    index_range(n, kernel.domain);
  }
  for (double t : ts) {
    if (!kernel.domain.contains(t)) throw UsageError(fmt::format("t = {} outside the kernel domain", t));
  }
  std::vector<std::string> header{"n", "D_mean"};
  for (double t : ts) header.push_back("D_at_" + format_number(t));
  CsvWriter csv(header);
  for (int n : ns) {
    const KantorovichOperator op(kernel, d2, n);
    std::vector<double> row{static_cast<double>(n), l2_error_mean(op, L2ErrorOptions{}, ctx.opt.workers)};
    for (double t : ts) row.push_back(l2_error_pointwise(op, t));
    csv.add_row(row);
    ctx.out << fmt::format("n={:4d} D_mean={:.6e}\n", n, row[1]);
  }
  OutputBundle bundle;
  bundle.add("kantorovich_error.csv", csv.str());
  ctx.finish(bundle, ctx.manifest());
  return kExitOk;
}

int run_paths(const Context& ctx) {
  const Kernel2D kernel = ctx.kernel();
  const Density2D d2 = ctx.density();
  KSnnoConfig cfg;
  cfg.n = ctx.single_n(20);
  cfg.m = ctx.opt.m;
  cfg.paths = ctx.paths(5);
  cfg.master_seed = ctx.opt.seed;
  cfg.t_grid = ctx.t_grid("0:1:21");
  cfg.validate(kernel.domain);

  std::vector<std::vector<PathwiseRow>> tables(cfg.paths);
  parallel_for(static_cast<std::size_t>(cfg.paths), ctx.opt.workers, [&](std::size_t p) {
    const WienerPath path = generate_wiener_path(cfg.master_seed, p, cfg.steps(), kernel.domain);
    tables[p] = pathwise_error_table(kernel, d2, cfg, path);
  });
  CsvWriter csv({"path", "t", "dW", "W", "X", "Xn", "abs_err", "sq_err"});
  for (std::size_t p = 0; p < tables.size(); ++p) {
    for (const PathwiseRow& r : tables[p]) {
      csv.add_row({static_cast<double>(p), r.t, r.dW, r.W, r.X, r.Xn, r.abs_err, r.sq_err});
    }
  }
  OutputBundle bundle;
  bundle.add("paths.csv", csv.str());
  ctx.finish(bundle, ctx.manifest());
  ctx.out << fmt::format("paths: wrote {} paths x {} times\n", cfg.paths, cfg.t_grid.size());
  return kExitOk;
}

int run_verify_activation(const Context& ctx) {
  const Activation a = Activation::from_name(ctx.opt.activation);
  const SigmoidalReport report = verify_sigmoidal_conditions(a, ctx.tolerance(1e-9));
  const std::string json = to_json(report);
  OutputBundle bundle;
  bundle.add("verify_activation.json", json);
  RunManifest manifest = ctx.manifest();
  manifest.results["all_passed"] = report.all_passed() ? "true" : "false";
  ctx.finish(bundle, manifest);
  ctx.out << json;
  return report.all_passed() ? kExitOk : kExitToleranceFailure;
}

}  // namespace

std::vector<double> parse_t_grid(const std::string& spec) {
  auto number = [&](const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      used = std::string::npos;
    }
    if (used != text.size() || !std::isfinite(v)) throw UsageError(fmt::format("bad t-grid value '{}'", text));
    return v;
  };
  if (spec.empty()) throw UsageError("empty t-grid");
  std::vector<double> grid;
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3) throw UsageError(fmt::format("t-grid '{}' must be a:b:count", spec));
    const double a = number(parts[0]), b = number(parts[1]);
    const double count = number(parts[2]);
    if (count < 1 || count != std::floor(count) || b < a) throw UsageError(fmt::format("bad t-grid '{}'", spec));
    return uniform_grid({a, b}, static_cast<int>(count));
  }
  std::stringstream ss(spec);
  for (std::string part; std::getline(ss, part, ',');) grid.push_back(number(part));
  return grid;
}

std::vector<int> parse_int_list(const std::string& spec) {
  std::vector<int> values;
  std::stringstream ss(spec);
  for (std::string part; std::getline(ss, part, ',');) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(part, &used);
    } catch (const std::exception&) {
      used = std::string::npos;
    }
    if (used != part.size()) throw UsageError(fmt::format("bad integer '{}' in '{}'", part, spec));
    values.push_back(v);
  }
  if (values.empty()) throw UsageError("empty integer list");
  return values;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kantorovich-type stochastic neural network operators"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_config("--config", "", "key = value configuration file; flags override it");

  Options opt;
  app.add_option("--activation", opt.activation, "Sigmoidal activation")->capture_default_str();
  app.add_option("--kernel", opt.kernel, "example-t2s, const:<c> or poly:<c>*t^<p>*s^<q>+...")->capture_default_str();
  app.add_option("--n", opt.n, "Operator order or comma-separated list");
  app.add_option("--m", opt.m, "Path grid steps (0 = max(2000, 50n))")->check(CLI::NonNegativeNumber);
  app.add_option("--paths", opt.paths, "Monte-Carlo path count");
  app.add_option("--seed", opt.seed, "Master seed")->capture_default_str();
  app.add_option("--fixture", opt.fixture, "CSV with header t,dW");
  app.add_option("--out", opt.out, "Output directory")->capture_default_str();
  app.add_option("--workers", opt.workers, "Worker threads (does not change results)")->check(CLI::PositiveNumber);
  app.add_option("--t-grid", opt.t_grid, "a:b:count or comma-separated times");
  app.add_option("--tolerance", opt.tolerance, "Tolerance override for the subcommand's check");

  const std::map<std::string, std::string> commands = {
      {"table1", "Recompute Table 1 from the fixture increments"},
      {"mse-sweep", "Monte-Carlo MSE against the L2 oracle over n"},
      {"covariance", "Empirical covariance of X_t against the kernel factorization"},
      {"neuron-check", "Stochastic neuron moments against the stated bound"},
      {"kantorovich-error", "Deterministic L2 error sweep D(n, t)"},
      {"paths", "Sample paths of X_t and its approximation"},
      {"verify-activation", "Numerical check of the sigmoidal conditions"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const Context ctx{opt, command, out};
  try {
    // Reject malformed kernel and activation names before any work is done.
    ctx.kernel();
    ctx.density();
    if (command == "table1") return run_table1(ctx);
    if (command == "mse-sweep") return run_mse_sweep(ctx);
    if (command == "covariance") return run_covariance(ctx);
    if (command == "neuron-check") return run_neuron_check(ctx);
    if (command == "kantorovich-error") return run_kantorovich_error(ctx);
    if (command == "paths") return run_paths(ctx);
    if (command == "verify-activation") return run_verify_activation(ctx);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  err << "error: unknown subcommand " << command << "\n";
  return kExitUsage;
}

}  // namespace ksnno::cli
