#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "config.hpp"
#include "manifest.hpp"

namespace fracdiff::cli {

namespace fs = std::filesystem;

namespace {

struct Context {
  RunConfig config;
  fs::path out_dir;
  std::ostream& out;
  std::ostream& err;
};

std::ofstream open_csv(const fs::path& path) {
  std::ofstream f(path, std::ios::trunc);
  require(static_cast<bool>(f), ErrorKind::Io, "cannot write '" + path.string() + "'");
  return f;
}

std::string num(double x) { return format_number(x); }

Field physical(const Field& v) {
  auto values = v.data();
  for (double& x : values) x += v.floor();
  return Field(v.grid(), std::move(values), v.exterior());
}

void write_trajectory(const fs::path& path, const std::vector<StepSummary>& rows) {
  auto f = open_csv(path);
  f << "t,mass,ball_mass,linf,min,max\n";
  for (const auto& r : rows) {
    f << num(r.t) << ',' << num(r.mass) << ',' << num(r.ball_mass) << ',' << num(r.l_inf) << ',' << num(r.min)
      << ',' << num(r.max) << '\n';
  }
}

void write_sweep(const fs::path& path, const SweepResult& r) {
  auto f = open_csv(path);
  f << "eps,ball_mass\n";
  for (std::size_t k = 0; k < r.ball_masses.size(); ++k) f << num(r.eps_values[k]) << ',' << num(r.ball_masses[k]) << '\n';
}

void report_sweep(Manifest& m, const SweepResult& r) {
  m.report("classification", to_string(r.classification));
  m.report("slope", r.slope);
  m.report("reference_mass", r.reference_mass);
  m.report("final_mass", r.ball_masses.empty() ? 0.0 : r.ball_masses.back());
  m.report("all_converged", r.all_converged);
}

std::vector<double> sample_times(const RunConfig& c) {
  std::vector<double> t{0.0};
  for (int k = 1; k <= c.samples; ++k) t.push_back(k == c.samples ? c.t_end : c.t_end * k / c.samples);
  return t;
}

// One named check of a verify suite.
struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

int finish_checks(Context& ctx, Manifest& m, const std::string& suite, const std::vector<Check>& checks) {
  auto f = open_csv(ctx.out_dir / ("verify_" + suite + ".csv"));
  f << "check,value,tolerance,pass\n";
  bool all = true;
  for (const auto& c : checks) {
    f << c.name << ',' << num(c.value) << ',' << num(c.tolerance) << ',' << (c.pass ? 1 : 0) << '\n';
    m.report(c.name, c.value);
    m.report(c.name + ".pass", c.pass);
    ctx.err << (c.pass ? "PASS " : "FAIL ") << suite << '.' << c.name << " value=" << num(c.value)
            << " tolerance=" << num(c.tolerance) << '\n';
    all = all && c.pass;
  }
  m.report("pass", all);
  return all ? Success : Inconclusive;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

std::vector<double> apply_op(const DiscreteOperator& op, const std::vector<double>& f) {
  std::vector<double> out(f.size());
  op.apply(f, out);
  return out;
}

std::vector<Check> operator_checks(const OperatorSpec& spec) {
  const auto op = DiscreteOperator::build(spec);
  const std::size_t size = spec.grid.size();
  const auto diag = op.diagonal();
  const double dmax = *std::max_element(diag.begin(), diag.end());
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> normal;
  auto random_field = [&] {
    std::vector<double> f(size);
    for (double& x : f) x = normal(rng);
    return f;
  };
  constexpr int trials = 100;

  double symmetry = 0.0, positivity = 0.0;
  for (int k = 0; k < trials; ++k) {
    const auto f = random_field(), g = random_field();
    const auto af = apply_op(op, f), ag = apply_op(op, g);
    const double scale = std::sqrt(dot(f, f) * dot(ag, ag)) + std::sqrt(dot(af, af) * dot(g, g));
    symmetry = std::max(symmetry, std::abs(dot(f, ag) - dot(af, g)) / scale);
    positivity = std::max(positivity, -dot(f, af) / (dmax * dot(f, f)));
  }
  std::vector<Check> checks{{"symmetry", symmetry, 1e-12, symmetry <= 1e-12},
                            {"positivity_deficit", positivity, 1e-12, positivity <= 1e-12}};

  if (op.is_kernel()) {
    for (double delta : {1.0, 0.1}) {
      double deficit = 0.0;
      for (int k = 0; k < trials; ++k) {
        const auto f = random_field();
        const auto af = apply_op(op, f);
        std::vector<double> pf(size);
        for (std::size_t i = 0; i < size; ++i) pf[i] = std::max(0.0, std::tanh(f[i] / delta));
        const double scale = dmax * std::sqrt(dot(pf, pf) * dot(f, f));
        deficit = std::max(deficit, -dot(pf, af) / scale);
      }
      checks.push_back({"stroock_varopoulos_deficit_delta_" + num(delta), deficit, 1e-12, deficit <= 1e-12});
    }
  }
  if (spec.kind == OperatorKind::PeriodicSpectral) {
    const auto a1 = apply_op(op, std::vector<double>(size, 1.0));
    double worst = 0.0;
    for (double x : a1) worst = std::max(worst, std::abs(x));
    worst /= dmax;
    checks.push_back({"constant_annihilated", worst, 1e-12, worst <= 1e-12});
  }
  return checks;
}

std::vector<std::size_t> central_nodes(const UniformGrid& g) {
  const double r = g.half_width() / 4.0;
  std::vector<std::size_t> nodes;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.radius_squared(k) <= r * r) nodes.push_back(k);
  }
  return nodes;
}

double max_residual(const std::vector<GreenIdentityReport>& rs) {
  double worst = 0.0;
  for (const auto& r : rs) worst = std::max(worst, std::abs(r.residual));
  return worst;
}

// Green identity at the configured (M, dt) and at (2M, dt / 2) over [0, t_end].
std::vector<Check> green_checks(Context& ctx, Manifest& m) {
  const auto& c = ctx.config;
  green_regime(c.dimension, c.s);
  auto base = c.parabolic();
  auto fine_cfg = c;
  fine_cfg.points *= 2;
  fine_cfg.dt /= 2.0;
  auto fine = fine_cfg.parabolic();

  auto run = [&](const ParabolicProblem& p) {
    const auto times = green_sample_times(0.0, p.t_end);
    const auto tr = evolve(p, times);
    require(!tr.failed, ErrorKind::StepFailure, "green run failed: " + tr.failure);
    return verify_green_identity(tr, p, central_nodes(p.op_spec.grid), 0.0, p.t_end);
  };
  const auto rb = run(base);
  const auto rf = run(fine);

  auto f = open_csv(ctx.out_dir / "green.csv");
  f << "level,x0,lhs,rhs,residual\n";
  for (const auto* rs : {&rb, &rf}) {
    const auto& g = (rs == &rb ? base : fine).op_spec.grid;
    for (const auto& r : *rs) {
      f << (rs == &rb ? 0 : 1) << ',' << num(g.node(r.node)[0]) << ',' << num(r.lhs) << ',' << num(r.rhs) << ','
        << num(r.residual) << '\n';
    }
  }
  const double eb = max_residual(rb), ef = max_residual(rf);
  m.report("regime", to_string(rb.empty() ? GreenRegime::Supercritical : rb.front().regime));
  m.report("residual_base", eb);
  m.report("residual_refined", ef);
  const double factor = ef > 0.0 ? eb / ef : std::numeric_limits<double>::infinity();
  return {{"refinement_factor", factor, 1.8, factor >= 1.8}};
}

std::vector<Check> explicit_checks(Context& ctx, Manifest& m) {
  const auto& c = ctx.config;
  require(c.s == 0.5 && c.nonlinearity == "log", ErrorKind::Config,
          "the explicit suite needs s = 0.5 and nonlinearity = log");
  auto p = c.parabolic();
  const LogHalf exact{1.0};
  require(p.t_end < exact.T, ErrorKind::Config, "the explicit suite needs t_end < 1");
  const auto& g = p.op_spec.grid;
  p.initial = Field::sample(g, [&](const std::vector<double>& x) { return explicit_solution(exact, x[0], 0.0); });
  const auto tr = evolve(p, {p.t_end});
  require(!tr.failed, ErrorKind::StepFailure, "explicit run failed: " + tr.failure);
  const Field u = physical(tr.at(p.t_end));
  const Field ref = Field::sample(g, [&](const std::vector<double>& x) { return explicit_solution(exact, x[0], p.t_end); });
  std::vector<double> diff(u.size());
  for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = u[k] - ref[k];
  const double error = lp_norm(ref.with_values(diff), 1.0) / lp_norm(ref, 1.0);
  write_csv((ctx.out_dir / "explicit.csv").string(), u);
  m.report("steps", tr.steps);
  return {{"relative_l1_error", error, 0.02, error <= 0.02}};
}

std::vector<Check> diagnostics_checks(Context& ctx, Manifest& m) {
  const auto& c = ctx.config;
  const auto p = c.parabolic();
  const auto tr = evolve(p, sample_times(c));
  require(!tr.failed, ErrorKind::StepFailure, "diagnostics run failed: " + tr.failure);
  const auto d = diagnostics(tr, p);
  write_trajectory(ctx.out_dir / "trajectory.csv", tr.summaries);
  m.report("steps", tr.steps);
  m.report("mass_drift", d.mass_drift);
  const double scale = 1.0 + lp_norm(p.initial, std::numeric_limits<double>::infinity());
  std::vector<Check> checks{{"linf_increase", d.linf_increase, 1e-10 * scale, d.linf_monotone},
                            {"lp_excess", d.lp_excess, 1e-10 * scale, d.lp_excess <= 1e-10 * scale}};
  if (d.ab_applicable) checks.push_back({"aronson_benilan_violation", d.ab_violation, 1e-8, d.ab_violation <= 1e-8});
  if (p.op_spec.grid.topology() == Topology::Periodic) {
    checks.push_back({"max_step_mass_change", d.max_step_mass_change, 1e-12, d.max_step_mass_change <= 1e-12});
  }
  return checks;
}

int cmd_solve_parabolic(Context& ctx, Manifest& m) {
  const auto& c = ctx.config;
  const auto p = c.parabolic();
  const auto tr = evolve(p, sample_times(c));
  write_trajectory(ctx.out_dir / "trajectory.csv", tr.summaries);
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    write_csv((ctx.out_dir / ("field_t" + std::to_string(k) + ".csv")).string(), physical(tr.snapshots[k]));
  }
  m.report("steps", tr.steps);
  m.report("halvings", tr.halvings);
  m.report("newton_iterations", tr.newton_iterations);
  m.report("failed", tr.failed);
  m.report("failure", tr.failure);
  m.report("final_mass", tr.summaries.back().mass);
  m.report("final_ball_mass", tr.summaries.back().ball_mass);
  m.report("sample_times", tr.times);
  if (tr.failed) {
    ctx.err << "run stopped at t = " << num(tr.summaries.back().t) << ": " << tr.failure << '\n';
    return Inconclusive;
  }
  return Success;
}

int cmd_solve_elliptic(Context& ctx, Manifest& m) {
  const auto& c = ctx.config;
  const auto g = c.grid();
  EllipticProblem p{DiscreteOperator::build(c.operator_spec()),
                    RegularizedNonlinearity(Nonlinearity::parse(c.nonlinearity), c.eps),
                    c.initial_field(g),
                    c.lambda,
                    parse_far_field(c.far_field),
                    c.tail_exponent};
  const auto sol = solve_elliptic(p, c.solver_options());
  write_csv((ctx.out_dir / "solution.csv").string(), physical(sol.v.with_floor(c.eps)));
  const auto& r = sol.report;
  const std::string line = std::to_string(r.iterations) + ',' + num(r.final_residual) + ',' + (r.converged ? "1" : "0");
  {
    auto f = open_csv(ctx.out_dir / "report.csv");
    f << "iterations,final_residual,converged\n" << line << '\n';
  }
  ctx.out << "iterations,final_residual,converged\n" << line << '\n';
  m.report("iterations", r.iterations);
  m.report("final_residual", r.final_residual);
  m.report("converged", r.converged);
  m.report("tolerance", r.tolerance);
  m.report("linear_iterations", r.linear_iterations);
  return r.converged ? Success : Inconclusive;
}

int cmd_sweep_epsilon(Context& ctx, Manifest& m, bool elliptic) {
  const auto& c = ctx.config;
  SweepResult r;
  if (elliptic) {
    r = elliptic_epsilon_sweep(c.initial_field(c.grid()), c.operator_spec(), Nonlinearity::parse(c.nonlinearity),
                               c.eps_values, c.ball(), c.rule(), c.solver_options());
  } else {
    r = epsilon_sweep(c.parabolic(), c.eps_values, c.tau, c.ball(), c.rule());
  }
  write_sweep(ctx.out_dir / "sweep.csv", r);
  m.report("elliptic", elliptic);
  report_sweep(m, r);
  ctx.err << "classification: " << to_string(r.classification) << " slope=" << num(r.slope) << '\n';
  return r.classification == Classification::Inconclusive ? Inconclusive : Success;
}

std::vector<double> steps_over(const std::vector<double>& values, int steps) {
  if (steps <= 0 || values.empty()) return values;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (steps == 1) return {*lo};
  std::vector<double> out;
  for (int k = 0; k < steps; ++k) out.push_back(std::lerp(*lo, *hi, static_cast<double>(k) / (steps - 1)));
  return out;
}

int cmd_phase_diagram(Context& ctx, Manifest& m, int s_steps, int n_steps) {
  const auto& c = ctx.config;
  const auto s_grid = steps_over(c.s_values, s_steps);
  const auto n_grid = steps_over(c.n_values, n_steps);
  const auto protocol = c.phase_protocol();
  const auto points = phase_diagram(s_grid, n_grid, protocol);
  auto f = open_csv(ctx.out_dir / "phase.csv");
  f << "s,n,classification,margin,final_mass,slope\n";
  int inconclusive = 0;
  for (const auto& p : points) {
    f << num(p.s) << ',' << num(p.n) << ',' << to_string(p.classification) << ',' << num(p.margin) << ','
      << num(p.final_mass) << ',' << num(p.slope) << '\n';
    if (p.classification == Classification::Inconclusive) {
      ++inconclusive;
      if (!p.failure.empty()) ctx.err << "s=" << num(p.s) << " n=" << num(p.n) << ": " << p.failure << '\n';
    }
  }
  m.report("s_grid", s_grid);
  m.report("n_grid", n_grid);
  m.report("points", points.size());
  m.report("inconclusive", inconclusive);
  return inconclusive > 0 ? Inconclusive : Success;
}

int cmd_verify(Context& ctx, Manifest& m, const std::string& suite) {
  m.report("suite", suite);
  std::vector<Check> checks;
  if (suite == "operator") {
    checks = operator_checks(ctx.config.operator_spec());
  } else if (suite == "green") {
    checks = green_checks(ctx, m);
  } else if (suite == "explicit") {
    checks = explicit_checks(ctx, m);
  } else {
    checks = diagnostics_checks(ctx, m);
  }
  return finish_checks(ctx, m, suite, checks);
}

int cmd_verify_operator(Context& ctx, Manifest& m) {
  const auto spec = ctx.config.operator_spec();
  const auto op = DiscreteOperator::build(spec);
  const auto& g = spec.grid;
  if (op.is_kernel()) {
    const auto w = op.weights();
    auto f = open_csv(ctx.out_dir / "weights.csv");
    f << "offset,weight\n";
    for (std::size_t k = 1; k < w.size(); ++k) f << k << ',' << num(w[k]) << '\n';
    write_csv((ctx.out_dir / "tails.csv").string(), Field(g, {op.tails().begin(), op.tails().end()}));
  } else {
    const auto mult = op.multipliers();
    auto f = open_csv(ctx.out_dir / "multipliers.csv");
    f << "mode,multiplier\n";
    for (std::size_t k = 0; k < mult.size(); ++k) f << k << ',' << num(mult[k]) << '\n';
  }
  write_csv((ctx.out_dir / "diagonal.csv").string(), Field(g, {op.diagonal().begin(), op.diagonal().end()}));
  m.report("normalization", op.normalization());
  m.report("kernel", op.is_kernel());
  return Success;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::StepFailure:
    case ErrorKind::Inconclusive:
      return Inconclusive;
    default:
      return UsageError;
  }
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Regularised fractional fast-diffusion solver and extinction experiments", "fracdiff"};
  app.require_subcommand(1);
  std::string config_path, out_dir = ".", suite;
  int s_steps = 0, n_steps = 0;
  bool elliptic = false;

  auto add = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Config file ([section] key = value)")->required();
    sub->add_option("--out", out_dir, "Output directory (created if missing)");
    return sub;
  };
  add("solve-parabolic", "March the regularised problem; writes trajectory.csv and field_t<k>.csv");
  add("solve-elliptic", "Solve v + lambda A phi_eps(v) = g with g the initial field; writes solution.csv");
  add("sweep-epsilon", "Ball mass of u_eps(tau) over [sweep] eps_values; writes sweep.csv")
      ->add_flag("--elliptic", elliptic, "Sweep the elliptic problem instead");
  auto* phase = add("phase-diagram", "Classify the (s, n) grid; writes phase.csv");
  phase->add_option("--s-steps", s_steps, "Evenly spaced s values over the range of [phase] s_values");
  phase->add_option("--n-steps", n_steps, "Evenly spaced n values over the range of [phase] n_values");
  add("verify", "Run a check suite; writes verify_<suite>.csv")
      ->add_option("--suite", suite, "green | explicit | diagnostics | operator")
      ->required()
      ->check(CLI::IsMember({"green", "explicit", "diagnostics", "operator"}));
  add("verify-operator", "Dump the operator's weight / multiplier tables as CSV");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return Success;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return UsageError;
  }

  const auto* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  const auto start = std::chrono::steady_clock::now();
  try {
    Context ctx{load_config(config_path), out_dir, out, err};
    fs::create_directories(ctx.out_dir);
    Manifest m(ctx.config, command);
    int code = Success;
    if (command == "solve-parabolic") {
      code = cmd_solve_parabolic(ctx, m);
    } else if (command == "solve-elliptic") {
      code = cmd_solve_elliptic(ctx, m);
    } else if (command == "sweep-epsilon") {
      code = cmd_sweep_epsilon(ctx, m, elliptic);
    } else if (command == "phase-diagram") {
      code = cmd_phase_diagram(ctx, m, s_steps, n_steps);
    } else if (command == "verify") {
      code = cmd_verify(ctx, m, suite);
    } else {
      code = cmd_verify_operator(ctx, m);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    m.report("exit_code", code);
    m.write(ctx.out_dir, seconds);
    return code;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return UsageError;
  }
}

int run_command(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_command(args, std::cout, std::cerr);
}

}  // namespace fracdiff::cli
