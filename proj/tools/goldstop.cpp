// goldstop: command-line front end.
//
// Exit status: 0 success, 2 invalid input, 3 numerical failure,
// 4 statistical check failed (simulate --check).

#include <cctype>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "goldstop/goldstop.hpp"

using namespace goldstop;
using nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kInvalid = 2, kNumerical = 3, kCheckFailed = 4 };

struct Globals {
  std::string out;
  std::string format = "csv";
  std::uint64_t seed = 42;
  unsigned threads = 1;
};

// A table rendered either as CSV or as a JSON object with a "rows" array.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<ordered_json>> rows;
  ordered_json meta = ordered_json::object();

  std::string render(const std::string& format) const {
    if (format == "json") {
      ordered_json doc = meta;
      ordered_json arr = ordered_json::array();
      for (const auto& r : rows) {
        ordered_json obj = ordered_json::object();
        for (std::size_t k = 0; k < header.size(); ++k) obj[header[k]] = r[k];
        arr.push_back(std::move(obj));
      }
      doc["rows"] = std::move(arr);
      return doc.dump(2) + "\n";
    }
    std::ostringstream out;
    CsvWriter w(out, header);
    for (const auto& r : rows) {
      for (const auto& cell : r) {
        if (cell.is_string())
          w.cell(cell.get<std::string>());
        else if (cell.is_number_float())
          w.cell(cell.get<double>());
        else if (cell.is_number_unsigned())
          w.cell(cell.get<std::uint64_t>());
        else if (cell.is_number_integer())
          w.cell(cell.get<std::int64_t>());
        else
          w.cell(cell.dump());
      }
      w.end_row();
    }
    return out.str();
  }
};

void emit(const Globals& g, const Table& t) {
  const std::string text = t.render(g.format);
  if (g.out.empty() || g.out == "-")
    std::cout << text << std::flush;
  else
    write_file_atomic(g.out, text);
}

std::string env_name(const std::string& flag) {
  std::string s = "GOLDSTOP_";
  for (char c : flag) s += c == '-' ? '_' : static_cast<char>(std::toupper(c));
  return s;
}

// Adds --name with an environment override GOLDSTOP_NAME.
template <class T>
CLI::Option* flag(CLI::App* app, const std::string& name, T& var, const std::string& help) {
  return app->add_option("--" + name, var, help)->envname(env_name(name))->capture_default_str();
}

SimulationConfig sim_config(const Globals& g, double step, double horizon, const std::string& scheme,
                            const std::string& monitor) {
  SimulationConfig cfg;
  cfg.step = step;
  cfg.horizon = horizon;
  cfg.scheme = scheme == "exact" ? Scheme::exact : Scheme::euler;
  cfg.monitor = monitor == "grid" ? MinimumMonitor::grid : MinimumMonitor::bridge;
  cfg.threads = g.threads;
  return cfg;
}

ordered_json estimate_json(const MonteCarloEstimate& e) {
  return {{"rule_id", e.rule_id}, {"mean", e.mean},         {"std_error", e.std_error},
          {"n_paths", e.n_paths}, {"seed", e.seed},         {"step", e.step},
          {"n_truncated", e.n_truncated}, {"truncation_warning", e.truncation_warning}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"goldstop: optimal prediction of the ultimate minimum of transient diffusions"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  flag(&app, "out", g.out, "output file, written atomically (default: stdout)");
  flag(&app, "format", g.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  flag(&app, "seed", g.seed, "random seed (integer)");
  flag(&app, "threads", g.threads, "worker threads (count)")->check(CLI::PositiveNumber);

  // lambda
  double lam_dim = 3;
  auto* c_lambda = app.add_subcommand("lambda", "optimal ratio lambda for a Bessel dimension");
  flag(c_lambda, "dim", lam_dim, "Bessel dimension d > 2 (unitless)");

  // boundary
  double b_dim = 3, b_imin = 0.5, b_imax = 2, b_xref = 1;
  int b_shots = 6, b_grid = 61;
  std::string b_model;
  auto* c_boundary = app.add_subcommand("boundary", "minimal boundary f_* by shooting from h");
  flag(c_boundary, "dim", b_dim, "Bessel dimension d > 2 (unitless)");
  flag(c_boundary, "i-min", b_imin, "lower end of the output grid (state units)");
  flag(c_boundary, "i-max", b_imax, "upper end of the output grid (state units)");
  flag(c_boundary, "shots", b_shots, "number of shots, started at i_min 10^-k (count)");
  flag(c_boundary, "grid", b_grid, "grid points, geometric in i (count, >= 16)");
  flag(c_boundary, "model", b_model,
       "custom model CSV with columns x,mu,sigma (state, state/time, state/sqrt(time)); "
       "replaces the Bessel model");
  flag(c_boundary, "x-ref", b_xref, "custom model anchor with L(x_ref) = -1 (state units)");

  // value
  double v_dim = 3, v_i = 1, v_x = 1;
  auto* c_value = app.add_subcommand("value", "value function: closed form and quadrature");
  flag(c_value, "dim", v_dim, "Bessel dimension d > 2 (unitless)");
  flag(c_value, "i", v_i, "running minimum i > 0 (state units)");
  flag(c_value, "x", v_x, "current state x >= i (state units)");

  // distribution
  double s_dim = 3, s_x0 = 1;
  int s_points = 101;
  auto* c_dist = app.add_subcommand("distribution", "law of X at the optimal stopping time");
  flag(c_dist, "dim", s_dim, "Bessel dimension d > 2 (unitless)");
  flag(c_dist, "x0", s_x0, "starting state (state units)");
  flag(c_dist, "points", s_points, "table rows on (0, lambda x0] (count)");

  // simulate
  double m_dim = 3, m_x0 = 1, m_step = 1e-4, m_horizon = 50;
  std::size_t m_paths = 50000;
  std::vector<double> m_ratios;
  std::string m_scheme = "euler", m_monitor = "bridge";
  bool m_check = false;
  auto* c_sim = app.add_subcommand("simulate", "Monte Carlo objective of ratio rules");
  flag(c_sim, "dim", m_dim, "Bessel dimension d > 2 (unitless)");
  flag(c_sim, "x0", m_x0, "starting state (state units)");
  flag(c_sim, "step", m_step, "time step (time units)");
  flag(c_sim, "horizon", m_horizon, "truncation horizon (time units)");
  flag(c_sim, "paths", m_paths, "number of paths (count, >= 2)");
  flag(c_sim, "ratio", m_ratios,
       "ratio rules X >= lambda I to compare (unitless, > 1; default: the optimal lambda)")
      ->delimiter(',');
  flag(c_sim, "scheme", m_scheme, "path scheme")->check(CLI::IsMember({"euler", "exact"}));
  flag(c_sim, "monitor", m_monitor, "running-minimum monitoring")
      ->check(CLI::IsMember({"bridge", "grid"}));
  c_sim->add_flag("--check", m_check,
                  "statistical acceptance checks for the optimal rule; exit 4 on failure")
      ->envname("GOLDSTOP_CHECK");

  // cev
  double z_dim = 3, z_c = 1, z_z0 = 1, z_step = 1e-4, z_horizon = 50;
  std::size_t z_paths = 50000;
  std::vector<double> z_kappas;
  bool z_diag = false;
  auto* c_cev = app.add_subcommand("cev", "drawdown rules for the CEV price Z = c_sigma X^(2-d)");
  flag(c_cev, "dim", z_dim, "source Bessel dimension d > 2 (unitless)");
  flag(c_cev, "c-sigma", z_c, "transform constant c_sigma > 0 (price * state^(d-2))");
  flag(c_cev, "z0", z_z0, "starting price (price units)");
  flag(c_cev, "step", z_step, "time step (time units)");
  flag(c_cev, "horizon", z_horizon, "truncation horizon (time units)");
  flag(c_cev, "paths", z_paths, "number of paths (count, >= 2)");
  flag(c_cev, "kappa", z_kappas,
       "drawdown multiples S >= kappa Z to compare (unitless, > 1; default: a sweep around "
       "lambda^(d-2))")
      ->delimiter(',');
  c_cev->add_flag("--diagnostic", z_diag,
                  "report E Z_T at T = 0.5, 1, 2, 5, 10 (time units) instead of the sweep")
      ->envname("GOLDSTOP_DIAGNOSTIC");

  // fib
  int f_n = 12;
  auto* c_fib = app.add_subcommand("fib", "Fibonacci retracement levels");
  flag(c_fib, "n", f_n, "Fibonacci index, 2..90 (count)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  try {
    Table t;
    if (*c_lambda) {
      const double lam = bessel_lambda(lam_dim);
      t.header = {"d", "lambda", "residual"};
      t.rows.push_back({lam_dim, lam, std::abs(bessel_characteristic(lam_dim, lam))});
    } else if (*c_boundary) {
      if (!(b_shots >= 1)) throw DomainError("--shots must be at least 1");
      const auto model = b_model.empty() ? make_bessel_model(b_dim) : load_model_csv(b_model, b_xref);
      const auto rep = minimal_boundary_report(model, b_imin, b_imax, b_grid,
                                               default_shot_starts(b_imin, b_shots));
      t.header = {"i", "f", "h", "f_over_i"};
      for (std::size_t k = 0; k < rep.boundary.grid().size(); ++k) {
        const double i = rep.boundary.grid()[k], f = rep.boundary.values()[k];
        t.rows.push_back({i, f, h_curve(model, i), f / i});
      }
      t.meta["provenance"] = describe(rep.boundary.provenance());
      t.meta["converged"] = rep.converged;
      t.meta["successive_gaps"] = rep.successive_gaps;
      if (!rep.converged)
        std::cerr << "warning: shots did not converge to the requested tolerance\n";
    } else if (*c_value) {
      const double lam = bessel_lambda(v_dim);
      const auto model = make_bessel_model(v_dim);
      const auto line = Boundary::linear(lam, geometric_grid(v_i * 0.5, v_i * 2, 33));
      t.header = {"d", "lambda", "i", "x", "closed_form", "numeric"};
      t.rows.push_back({v_dim, lam, v_i, v_x, bessel_value(v_dim, lam, v_i, v_x),
                        value_function_numeric(model, line, v_i, v_x)});
    } else if (*c_dist) {
      if (s_points < 2) throw DomainError("--points must be at least 2");
      const auto dist = StoppedDistribution::optimal(s_dim, s_x0);
      t.header = {"y", "cdf", "pdf"};
      for (int k = 1; k <= s_points; ++k) {
        const double y = dist.upper() * k / s_points;
        t.rows.push_back({y, dist.cdf(y), k == s_points ? 0.0 : dist.pdf(y)});
      }
      t.meta["lambda"] = dist.lambda();
      t.meta["exponent"] = dist.exponent();
      t.meta["mean"] = dist.mean();
    } else if (*c_sim) {
      const auto model = make_bessel_model(m_dim);
      const double lam = bessel_lambda(m_dim);
      if (m_ratios.empty()) m_ratios.push_back(lam);
      std::vector<StoppingRule> rules;
      for (double r : m_ratios) rules.push_back(StoppingRule::ratio(r));
      const auto cfg = sim_config(g, m_step, m_horizon, m_scheme, m_monitor);
      const auto cmp = compare_rules(model, m_x0, rules, m_paths, g.seed, cfg);
      t.header = {"rule_id", "mean", "std_error", "n_paths", "seed", "step"};
      ordered_json diag = ordered_json::array();
      for (const auto& e : cmp.estimates) {
        t.rows.push_back({e.rule_id, e.mean, e.std_error, e.n_paths, e.seed, e.step});
        diag.push_back(estimate_json(e));
        if (e.truncation_warning)
          std::cerr << "warning: " << e.rule_id << ": " << e.n_truncated
                    << " paths truncated at the horizon\n";
      }
      t.meta["estimates"] = diag;
      int status = kOk;
      if (m_check) {
        const auto s = sample_stopped_distribution(model, m_x0, StoppingRule::ratio(lam), m_paths,
                                                   g.seed, cfg);
        const auto e = estimate_objective(model, m_x0, StoppingRule::ratio(lam), m_paths, g.seed,
                                          cfg);
        const double v = bessel_value(m_dim, lam, m_x0, m_x0);
        const double target_mean = StoppedDistribution::optimal(m_dim, m_x0).mean();
        const bool ok_obj = std::abs(e.mean - v) <= 3 * e.std_error + 0.01 * std::abs(v);
        const bool ok_ks = s.ks <= 0.02;
        const bool ok_mean = std::abs(s.mean / target_mean - 1) <= 0.01;
        const bool ok_trunc = !e.truncation_warning;
        std::fprintf(stderr, "check objective %.6f vs %.6f: %s\n", e.mean, v, ok_obj ? "pass" : "FAIL");
        std::fprintf(stderr, "check KS %.4f <= 0.02: %s\n", s.ks, ok_ks ? "pass" : "FAIL");
        std::fprintf(stderr, "check mean %.6f vs %.6f: %s\n", s.mean, target_mean,
                     ok_mean ? "pass" : "FAIL");
        std::fprintf(stderr, "check truncation %zu paths: %s\n", e.n_truncated,
                     ok_trunc ? "pass" : "FAIL");
        t.meta["check"] = {{"objective", ok_obj}, {"ks", ok_ks}, {"mean", ok_mean},
                           {"truncation", ok_trunc}};
        if (!(ok_obj && ok_ks && ok_mean && ok_trunc)) status = kCheckFailed;
      }
      emit(g, t);
      return status;
    } else if (*c_cev) {
      const CevModel cev(z_dim, z_c);
      const double threshold = cev_rule_threshold(cev);
      t.meta["threshold"] = threshold;
      t.meta["retracement"] = 1 - 1 / threshold;
      if (z_diag) {
        const auto d = strict_local_martingale_diagnostic(cev, z_z0, {0.5, 1, 2, 5, 10}, z_paths,
                                                          g.seed);
        t.header = {"T", "mean_z", "std_error"};
        for (std::size_t k = 0; k < d.times.size(); ++k)
          t.rows.push_back({d.times[k], d.mean_z[k].mean, d.mean_z[k].std_error});
      } else {
        if (z_kappas.empty()) z_kappas = {0.6 * threshold, 0.8 * threshold, threshold,
                                          1.2 * threshold, 1.5 * threshold};
        for (double& k : z_kappas)
          if (!(k > 1.0)) throw DomainError("drawdown multiples must exceed 1");
        const auto cfg = sim_config(g, z_step, z_horizon, "euler", "bridge");
        const auto cmp = compare_cev_rules(cev, z_z0, z_kappas, z_paths, g.seed, cfg);
        t.header = {"kappa", "mean", "std_error"};
        for (std::size_t k = 0; k < z_kappas.size(); ++k)
          t.rows.push_back({z_kappas[k], cmp.estimates[k].mean, cmp.estimates[k].std_error});
      }
    } else if (*c_fib) {
      const auto l = fibonacci_levels(f_n);
      t.header = {"n", "shallow", "moderate", "golden"};
      t.rows.push_back({f_n, l.shallow, l.moderate, l.golden});
      t.meta["retracement"] = retracement_fraction();
    }
    emit(g, t);
    return kOk;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kInvalid;
  } catch (const UnsupportedOperation& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kInvalid;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const ConsistencyError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
}
