#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace fracdiff::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  double x = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  require(res.ec == std::errc() && res.ptr == text.data() + text.size() && std::isfinite(x), ErrorKind::Config,
          key + ": expected a real number, got '" + text + "'");
  return x;
}

int parse_int(const std::string& key, const std::string& text) {
  int x = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  require(res.ec == std::errc() && res.ptr == text.data() + text.size(), ErrorKind::Config,
          key + ": expected an integer, got '" + text + "'");
  return x;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  require(!out.empty(), ErrorKind::Config, key + ": expected a comma-separated list of reals");
  return out;
}

std::string format_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (k > 0) out += ", ";
    out += format_number(xs[k]);
  }
  return out;
}

void check(bool ok, const std::string& message) { require(ok, ErrorKind::Config, message); }

struct Entry {
  std::string name;  // section.key
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

Entry real(std::string name, double RunConfig::*m, std::function<void(double)> valid = {}) {
  return {name, [m](const RunConfig& c) { return format_number(c.*m); },
          [m, name, valid](RunConfig& c, const std::string& v) {
            const double x = parse_double(name, v);
            if (valid) valid(x);
            c.*m = x;
          }};
}

Entry integer(std::string name, int RunConfig::*m, std::function<void(int)> valid = {}) {
  return {name, [m](const RunConfig& c) { return std::to_string(c.*m); },
          [m, name, valid](RunConfig& c, const std::string& v) {
            const int x = parse_int(name, v);
            if (valid) valid(x);
            c.*m = x;
          }};
}

Entry text(std::string name, std::string RunConfig::*m, std::function<void(const std::string&)> valid) {
  return {name, [m](const RunConfig& c) { return c.*m; },
          [m, valid](RunConfig& c, const std::string& v) {
            valid(v);
            c.*m = v;
          }};
}

Entry list(std::string name, std::vector<double> RunConfig::*m, std::function<void(const std::vector<double>&)> valid) {
  return {name, [m](const RunConfig& c) { return format_list(c.*m); },
          [m, name, valid](RunConfig& c, const std::string& v) {
            auto xs = parse_list(name, v);
            valid(xs);
            c.*m = std::move(xs);
          }};
}

auto positive(const std::string& what) {
  return [what](double x) { check(x > 0.0, what + " must be positive"); };
}
auto nonnegative(const std::string& what) {
  return [what](double x) { check(x >= 0.0, what + " must be >= 0"); };
}
auto open_unit(const std::string& what) {
  return [what](double x) { check(x > 0.0 && x < 1.0, what + " must lie in (0,1)"); };
}
auto at_least(const std::string& what, int lo) {
  return [what, lo](int x) { check(x >= lo, what + " must be >= " + std::to_string(lo)); };
}

const std::vector<Entry>& table() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    e.push_back(integer("grid.dimension", &RunConfig::dimension,
                        [](int d) { check(d == 1 || d == 2, "dimension must be 1 or 2"); }));
    e.push_back(real("grid.half_width", &RunConfig::half_width, positive("half_width")));
    e.push_back(integer("grid.points", &RunConfig::points, at_least("points", 8)));
    e.push_back(real("operator.s", &RunConfig::s, open_unit("s")));
    e.push_back(text("operator.kind", &RunConfig::kind, [](const std::string& v) { parse_operator_kind(v); }));
    e.push_back(text("problem.nonlinearity", &RunConfig::nonlinearity,
                     [](const std::string& v) { Nonlinearity::parse(v); }));
    e.push_back(real("problem.eps", &RunConfig::eps, positive("eps")));
    e.push_back(text("problem.far_field", &RunConfig::far_field, [](const std::string& v) { parse_far_field(v); }));
    e.push_back(real("problem.tail_exponent", &RunConfig::tail_exponent, nonnegative("tail_exponent")));
    e.push_back(text("problem.initial", &RunConfig::initial, [](const std::string& v) {
      check(v == "gaussian" || v == "bump" || v == "log-half",
            "initial must be 'gaussian', 'bump' or 'log-half', got '" + v + "'");
    }));
    e.push_back(real("problem.amplitude", &RunConfig::amplitude, positive("amplitude")));
    e.push_back(real("problem.width", &RunConfig::width, positive("width")));
    e.push_back(real("problem.lambda", &RunConfig::lambda, positive("lambda")));
    e.push_back(real("time.t_end", &RunConfig::t_end, positive("t_end")));
    e.push_back(real("time.dt", &RunConfig::dt, positive("dt")));
    e.push_back(integer("time.samples", &RunConfig::samples, at_least("samples", 1)));
    e.push_back(integer("time.max_halvings", &RunConfig::max_halvings, at_least("max_halvings", 0)));
    e.push_back(real("solver.tol", &RunConfig::tol));
    e.push_back(integer("solver.max_iter", &RunConfig::max_iter, at_least("max_iter", 1)));
    e.push_back(integer("solver.dense_limit", &RunConfig::dense_limit, at_least("dense_limit", 0)));
    e.push_back(integer("solver.max_linear_iter", &RunConfig::max_linear_iter, at_least("max_linear_iter", 1)));
    e.push_back(integer("solver.band", &RunConfig::band, at_least("band", 0)));
    e.push_back(list("sweep.eps_values", &RunConfig::eps_values, [](const std::vector<double>& xs) {
      for (std::size_t k = 0; k < xs.size(); ++k) {
        check(xs[k] > 0.0, "eps_values must be positive");
        check(k == 0 || xs[k] < xs[k - 1], "eps_values must be strictly decreasing");
      }
    }));
    e.push_back(real("sweep.tau", &RunConfig::tau, positive("tau")));
    e.push_back(real("sweep.ball_radius", &RunConfig::ball_radius, positive("ball_radius")));
    e.push_back(real("sweep.theta", &RunConfig::theta, positive("theta")));
    e.push_back(real("sweep.sigma", &RunConfig::sigma, positive("sigma")));
    e.push_back(real("sweep.stabilization", &RunConfig::stabilization, positive("stabilization")));
    e.push_back(real("sweep.persistence_floor", &RunConfig::persistence_floor, nonnegative("persistence_floor")));
    e.push_back(list("phase.s_values", &RunConfig::s_values, [](const std::vector<double>& xs) {
      for (double x : xs) check(x > 0.0 && x < 1.0, "s_values must lie in (0,1)");
    }));
    e.push_back(list("phase.n_values", &RunConfig::n_values, [](const std::vector<double>& xs) {
      for (double x : xs) check(x >= 0.0, "n_values must be >= 0");
    }));
    e.push_back(real("phase.half_width", &RunConfig::phase_half_width, positive("phase half_width")));
    e.push_back(integer("phase.points", &RunConfig::phase_points, at_least("phase points", 8)));
    e.push_back(real("phase.dt", &RunConfig::phase_dt, positive("phase dt")));
    e.push_back(text("phase.far_field", &RunConfig::phase_far_field, [](const std::string& v) { parse_far_field(v); }));
    e.push_back(real("phase.exclusion_band", &RunConfig::exclusion_band, nonnegative("exclusion_band")));
    e.push_back(integer("phase.threads", &RunConfig::threads, at_least("threads", 0)));
    return e;
  }();
  return entries;
}

const Entry* find_entry(const std::string& name) {
  for (const auto& e : table()) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& e : table()) out.push_back(e.name);
    return out;
  }();
  return keys;
}

std::string config_value(const RunConfig& c, const std::string& key) {
  const auto* e = find_entry(key);
  require(e != nullptr, ErrorKind::Config, "unknown key '" + key + "'");
  return e->get(c);
}

std::string nearest_key(const std::string& key) {
  std::string best;
  std::size_t best_d = std::string::npos;
  for (const auto& e : table()) {
    const auto d = edit_distance(key, e.name);
    if (d < best_d) {
      best_d = d;
      best = e.name;
    }
  }
  return best;
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::stringstream in(text);
  std::string raw, section;
  std::vector<std::string> seen;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']' && line.size() > 2, ErrorKind::Config, where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::Config, where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), ErrorKind::Config, where + "missing key");
    require(!section.empty(), ErrorKind::Config, where + "key '" + key + "' outside a [section]");
    const std::string name = section + "." + key;
    const auto* e = find_entry(name);
    require(e != nullptr, ErrorKind::Config,
            where + "unknown key '" + name + "' (nearest valid key: '" + nearest_key(name) + "')");
    require(std::find(seen.begin(), seen.end(), name) == seen.end(), ErrorKind::Config,
            where + "duplicate key '" + name + "'");
    seen.push_back(name);
    try {
      e->set(c, value);
    } catch (const Error& err) {
      std::string what = err.what();
      const std::string prefix = std::string(to_string(err.kind())) + ": ";
      if (what.rfind(prefix, 0) == 0) what.erase(0, prefix.size());
      fail(ErrorKind::Config, where + what);
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  std::string out, section;
  for (const auto& e : table()) {
    const auto dot = e.name.find('.');
    const std::string sec = e.name.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += "\n";
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += e.name.substr(dot + 1) + " = " + e.get(c) + "\n";
  }
  return out;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  for (const auto& e : table()) {
    if (e.get(a) != e.get(b)) return false;
  }
  return true;
}

void RunConfig::validate() const {
  const auto k = parse_operator_kind(kind);
  check(dimension == 1 || k != OperatorKind::TruncatedQuadrature || parse_far_field(far_field) == FarField::Floor,
        "far_field other than 'floor' needs dimension = 1");
  check(k != OperatorKind::PeriodicSpectral || points % 2 == 0, "periodic-spectral needs an even number of points");
  check(dt <= t_end, "dt must not exceed t_end");
  check(eps_values.size() >= 1, "eps_values must not be empty");
  check(phase_dt <= tau, "phase dt must not exceed tau");
}

UniformGrid RunConfig::grid() const {
  const auto k = parse_operator_kind(kind);
  return {dimension, half_width, points,
          k == OperatorKind::PeriodicSpectral ? Topology::Periodic : Topology::Truncated};
}

OperatorSpec RunConfig::operator_spec() const { return {s, parse_operator_kind(kind), grid()}; }

Field RunConfig::initial_field(const UniformGrid& g) const {
  const double a = amplitude, w = width;
  if (initial == "bump") {
    return Field::sample(g, [a, w](const std::vector<double>& x) {
      double r2 = 0.0;
      for (double xi : x) r2 += xi * xi;
      return a * std::max(0.0, 1.0 - r2 / (w * w));
    });
  }
  if (initial == "log-half") {
    return Field::sample(g, [a](const std::vector<double>& x) {
      double r2 = 0.0;
      for (double xi : x) r2 += xi * xi;
      return a * 2.0 / (1.0 + r2);
    });
  }
  return Field::sample(g, [a, w](const std::vector<double>& x) {
    double r2 = 0.0;
    for (double xi : x) r2 += xi * xi;
    return a * std::exp(-r2 / (w * w));
  });
}

SolverOptions RunConfig::solver_options() const {
  SolverOptions o;
  o.tol = tol;
  o.max_iter = max_iter;
  o.dense_limit = static_cast<std::size_t>(dense_limit);
  o.max_linear_iter = max_linear_iter;
  o.band = band;
  return o;
}

ClassificationRule RunConfig::rule() const { return {theta, sigma, stabilization, persistence_floor}; }

BallSpec RunConfig::ball() const {
  return BallSpec{std::vector<double>(static_cast<std::size_t>(dimension), 0.0), ball_radius};
}

ParabolicProblem RunConfig::parabolic() const {
  ParabolicProblem p;
  p.op_spec = operator_spec();
  p.nl = Nonlinearity::parse(nonlinearity);
  p.eps = eps;
  p.initial = initial_field(p.op_spec.grid);
  p.t_end = t_end;
  p.dt = dt;
  p.far_field = parse_far_field(far_field);
  p.tail_exponent = tail_exponent;
  p.ball = ball();
  p.solver = solver_options();
  p.max_halvings = max_halvings;
  return p;
}

PhaseProtocol RunConfig::phase_protocol() const {
  PhaseProtocol pr;
  pr.half_width = phase_half_width;
  pr.points = phase_points;
  pr.dt = phase_dt;
  pr.tau = tau;
  pr.eps_values = eps_values;
  pr.ball_radius = ball_radius;
  pr.amplitude = amplitude;
  pr.width = width;
  pr.far_field = parse_far_field(phase_far_field);
  pr.rule = rule();
  pr.exclusion_band = exclusion_band;
  pr.threads = static_cast<unsigned>(threads);
  pr.solver = solver_options();
  return pr;
}

}  // namespace fracdiff::cli
