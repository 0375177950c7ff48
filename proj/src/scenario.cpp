#include "aptfloquet/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "aptfloquet/spectra.hpp"

namespace apt::scenario {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Schema helpers

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  return j;
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
      throw SchemaError(join(path, k), "unknown key");
  }
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw SchemaError(field, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw SchemaError(field, "must be finite");
  return x;
}

double number_or(const json& obj, const char* key, const std::string& path, double fallback) {
  return obj.contains(key) ? number(obj.at(key), join(path, key)) : fallback;
}

double required_number(const json& obj, const char* key, const std::string& path) {
  if (!obj.contains(key)) throw SchemaError(join(path, key), "required");
  return number(obj.at(key), join(path, key));
}

std::uint64_t unsigned_integer(const json& j, const std::string& field) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0))
    throw SchemaError(field, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

std::string string_value(const json& j, const std::string& field) {
  if (!j.is_string()) throw SchemaError(field, "expected a string");
  return j.get<std::string>();
}

bool boolean(const json& j, const std::string& field) {
  if (!j.is_boolean()) throw SchemaError(field, "expected true or false");
  return j.get<bool>();
}

std::vector<double> number_list(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw SchemaError(field, "expected a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

Complex complex_value(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2) throw SchemaError(field, "expected [re, im]");
  return {number(j[0], field + "[0]"), number(j[1], field + "[1]")};
}

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

Range parse_range(const json& j, const std::string& path) {
  require_object(j, path);
  allow_keys(j, path, {"from", "to", "points"});
  Range r;
  r.from = required_number(j, "from", path);
  r.to = required_number(j, "to", path);
  if (!j.contains("points")) throw SchemaError(join(path, "points"), "required");
  r.points = unsigned_integer(j.at("points"), join(path, "points"));
  if (r.points < 2) throw SchemaError(join(path, "points"), "must be >= 2");
  if (!(r.to > r.from)) throw SchemaError(join(path, "to"), "must exceed 'from'");
  return r;
}

json range_json(const Range& r) { return {{"from", r.from}, {"to", r.to}, {"points", r.points}}; }

// Either an explicit list or a {from, to, points} range.
std::vector<double> parse_axis(const json& j, const std::string& path) {
  if (j.is_array()) return number_list(j, path);
  return parse_range(j, path).values();
}

// ---------------------------------------------------------------------------
// States

const double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

std::optional<Vector2> named_state(const std::string& name) {
  if (name == "down") return basis::down;
  if (name == "up") return basis::up;
  if (name == "plus_x") return Vector2{kInvSqrt2, kInvSqrt2};
  if (name == "minus_x") return Vector2{kInvSqrt2, -kInvSqrt2};
  return std::nullopt;
}

Vector2 parse_pure(const json& j, const std::string& path) {
  if (j.is_string()) {
    const auto v = named_state(j.get<std::string>());
    if (!v) throw SchemaError(path, "unknown state name (down, up, plus_x, minus_x)");
    return *v;
  }
  require_object(j, path);
  allow_keys(j, path, {"amplitudes"});
  if (!j.contains("amplitudes")) throw SchemaError(join(path, "amplitudes"), "required");
  const std::string f = join(path, "amplitudes");
  const json& a = j.at("amplitudes");
  if (!a.is_array() || a.size() != 2) throw SchemaError(f, "expected [[re, im], [re, im]]");
  const Vector2 v{complex_value(a[0], f + "[0]"), complex_value(a[1], f + "[1]")};
  if (std::abs(v.norm() - 1.0) > 1e-12) throw SchemaError(f, "state must be normalized to 1 within 1e-12");
  return v;
}

json pure_json(const Vector2& v) { return {{"amplitudes", json::array({complex_json(v.up), complex_json(v.down)})}}; }

StateSpec parse_state(const json& j, const std::string& path) {
  StateSpec s;
  if (j.is_string()) {
    const auto v = named_state(j.get<std::string>());
    if (!v) throw SchemaError(path, "unknown state name (down, up, plus_x, minus_x)");
    s.kind = StateSpec::Kind::named;
    s.name = j.get<std::string>();
    return s;
  }
  require_object(j, path);
  if (j.contains("mixture")) {
    allow_keys(j, path, {"mixture"});
    const std::string mp = join(path, "mixture");
    const json& m = require_object(j.at("mixture"), mp);
    allow_keys(m, mp, {"psi1", "psi2", "beta"});
    if (!m.contains("psi1")) throw SchemaError(join(mp, "psi1"), "required");
    if (!m.contains("psi2")) throw SchemaError(join(mp, "psi2"), "required");
    s.kind = StateSpec::Kind::mixture;
    s.psi1 = parse_pure(m.at("psi1"), join(mp, "psi1"));
    s.psi2 = parse_pure(m.at("psi2"), join(mp, "psi2"));
    s.beta = required_number(m, "beta", mp);
    if (!(s.beta >= 0.0 && s.beta <= 1.0)) throw SchemaError(join(mp, "beta"), "must lie in [0, 1]");
    return s;
  }
  s.kind = StateSpec::Kind::amplitudes;
  s.amplitudes = parse_pure(j, path);
  return s;
}

json state_json(const StateSpec& s) {
  switch (s.kind) {
    case StateSpec::Kind::named: return s.name;
    case StateSpec::Kind::amplitudes: return pure_json(s.amplitudes);
    case StateSpec::Kind::mixture:
      return {{"mixture", {{"psi1", pure_json(s.psi1)}, {"psi2", pure_json(s.psi2)}, {"beta", s.beta}}}};
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Generators

bool is_sweep_mode(Mode m) {
  return m == Mode::eigenstates || m == Mode::spectrum || m == Mode::sheet || m == Mode::wind || m == Mode::fit;
}

bool uses_time(Mode m) {
  return m == Mode::evolve || m == Mode::entropy || m == Mode::tomography || m == Mode::eigenstates;
}

bool uses_shots(Mode m) {
  return m == Mode::evolve || m == Mode::entropy || m == Mode::tomography || m == Mode::fit;
}

bool uses_state(Mode m) { return m == Mode::evolve || m == Mode::entropy || m == Mode::tomography; }

Generator parse_generator(const json& j, Mode mode) {
  const std::string path = "generator";
  require_object(j, path);
  if (j.size() != 1) throw SchemaError(path, "exactly one of canonical, segments, static is required");
  if (j.contains("canonical")) {
    const std::string p = "generator.canonical";
    const json& c = require_object(j.at("canonical"), p);
    CanonicalGenerator g;
    if (is_sweep_mode(mode)) {
      allow_keys(c, p, {"J", "alpha"});
    } else {
      allow_keys(c, p, {"J", "Gamma", "alpha", "delta", "reversed"});
    }
    g.params.J = number_or(c, "J", p, 1.0);
    g.params.Gamma = number_or(c, "Gamma", p, 0.0);
    g.params.alpha = number_or(c, "alpha", p, 0.5);
    g.params.delta = number_or(c, "delta", p, 0.0);
    if (c.contains("reversed")) g.reversed = boolean(c.at("reversed"), join(p, "reversed"));
    if (!(g.params.J > 0.0)) throw SchemaError(join(p, "J"), "must be > 0");
    if (!(g.params.Gamma >= 0.0)) throw SchemaError(join(p, "Gamma"), "must be >= 0");
    if (!(g.params.alpha > 0.0 && g.params.alpha < 1.0)) throw SchemaError(join(p, "alpha"), "must lie in (0, 1)");
    return g;
  }
  if (is_sweep_mode(mode)) throw SchemaError(path, std::string(to_string(mode)) + " mode needs a canonical generator");
  if (j.contains("segments")) {
    const std::string p = "generator.segments";
    const json& s = require_object(j.at("segments"), p);
    allow_keys(s, p, {"list", "middle"});
    if (!s.contains("list") || !s.at("list").is_array() || s.at("list").empty())
      throw SchemaError(join(p, "list"), "expected a non-empty array of segments");
    SegmentsGenerator g;
    const json& list = s.at("list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string sp = join(p, "list") + "[" + std::to_string(i) + "]";
      const json& e = require_object(list[i], sp);
      allow_keys(e, sp, {"J", "Gamma", "phi", "delta", "duration"});
      SegmentParams seg;
      seg.J = number_or(e, "J", sp, 0.0);
      seg.Gamma = number_or(e, "Gamma", sp, 0.0);
      seg.phi = number_or(e, "phi", sp, 0.0);
      seg.delta = number_or(e, "delta", sp, 0.0);
      seg.duration = required_number(e, "duration", sp);
      if (!(seg.duration > 0.0)) throw SchemaError(join(sp, "duration"), "must be > 0");
      if (!(seg.Gamma >= 0.0)) throw SchemaError(join(sp, "Gamma"), "must be >= 0");
      g.segments.push_back(seg);
    }
    g.middle = s.contains("middle") ? unsigned_integer(s.at("middle"), join(p, "middle")) : g.segments.size() / 2;
    if (g.middle >= g.segments.size()) throw SchemaError(join(p, "middle"), "segment index out of range");
    return g;
  }
  if (j.contains("static")) {
    const std::string p = "generator.static";
    const json& s = require_object(j.at("static"), p);
    allow_keys(s, p, {"matrix", "alpha"});
    if (!s.contains("matrix")) throw SchemaError(join(p, "matrix"), "required");
    StaticGenerator g;
    g.matrix = matrix_from_json(s.at("matrix"), join(p, "matrix"));
    g.alpha = number_or(s, "alpha", p, 1.0);
    if (!(g.alpha > 0.0)) throw SchemaError(join(p, "alpha"), "must be > 0");
    return g;
  }
  throw SchemaError(path, "exactly one of canonical, segments, static is required");
}

json generator_json(const Generator& g, Mode mode) {
  if (const auto* c = std::get_if<CanonicalGenerator>(&g)) {
    if (is_sweep_mode(mode)) return {{"canonical", {{"J", c->params.J}, {"alpha", c->params.alpha}}}};
    return {{"canonical",
             {{"J", c->params.J},
              {"Gamma", c->params.Gamma},
              {"alpha", c->params.alpha},
              {"delta", c->params.delta},
              {"reversed", c->reversed}}}};
  }
  if (const auto* s = std::get_if<SegmentsGenerator>(&g)) {
    json list = json::array();
    for (const auto& seg : s->segments) {
      list.push_back(
          {{"J", seg.J}, {"Gamma", seg.Gamma}, {"phi", seg.phi}, {"delta", seg.delta}, {"duration", seg.duration}});
    }
    return {{"segments", {{"list", list}, {"middle", s->middle}}}};
  }
  const auto& st = std::get<StaticGenerator>(g);
  return {{"static", {{"matrix", matrix_to_json(st.matrix)}, {"alpha", st.alpha}}}};
}

Mode parse_mode(const json& j) {
  const std::string m = string_value(j, "mode");
  for (Mode x : {Mode::evolve, Mode::entropy, Mode::eigenstates, Mode::spectrum, Mode::sheet, Mode::wind, Mode::fit,
                 Mode::tomography}) {
    if (m == to_string(x)) return x;
  }
  throw SchemaError("mode", "unknown mode '" + m + "'");
}

// ---------------------------------------------------------------------------
// Output helpers

std::string csv_header_comment(const ScenarioConfig& c) { return "# config=" + to_json(c).dump() + "\n"; }

std::filesystem::path open_output(const std::filesystem::path& dir, const std::string& name, std::ofstream& out) {
  const std::filesystem::path path = dir / name;
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  out.open(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return path;
}

void close_output(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

std::filesystem::path write_text(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
  std::ofstream out;
  const auto path = open_output(dir, name, out);
  out << text;
  close_output(out, path);
  return path;
}

std::string row(std::initializer_list<double> xs) {
  std::string s;
  for (double x : xs) {
    if (!s.empty()) s += ',';
    s += format_number(x);
  }
  return s;
}

std::string rho_cells(const Matrix2& m) {
  return row({m(0, 0).real(), m(0, 0).imag(), m(0, 1).real(), m(0, 1).imag(), m(1, 0).real(), m(1, 0).imag(),
              m(1, 1).real(), m(1, 1).imag()});
}

const char* kTrajectoryColumns =
    "period,t,alpha_t,n_up,n_down,nbar_up,nbar_down,entropy,"
    "re_rho_uu,im_rho_uu,re_rho_ud,im_rho_ud,re_rho_du,im_rho_du,re_rho_dd,im_rho_dd";

std::string summary_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// Time grids

struct Timeline {
  std::vector<double> times;
  std::vector<std::size_t> periods;
  double step = 0.0;
  double alpha = 0.0;
};

double generator_alpha(const ScenarioConfig& c) {
  if (const auto* g = std::get_if<CanonicalGenerator>(&c.generator)) return g->params.alpha;
  if (const auto* g = std::get_if<StaticGenerator>(&c.generator)) return g->alpha;
  const auto& s = std::get<SegmentsGenerator>(c.generator);
  return DrivingProtocol(s.segments, s.middle).alpha();
}

std::size_t horizon_periods(const TimeSpec& t, double step, double alpha) {
  if (t.horizon_periods) return *t.horizon_periods;
  return static_cast<std::size_t>(std::ceil(*t.horizon_alpha_t / (alpha * step) - 1e-9));
}

Timeline timeline(const ScenarioConfig& c, double step) {
  Timeline tl;
  tl.step = step;
  tl.alpha = generator_alpha(c);
  const std::size_t n = horizon_periods(c.time, step, tl.alpha);
  for (std::size_t k = 0; k <= n; k += c.time.record_every) {
    tl.periods.push_back(k);
    tl.times.push_back(static_cast<double>(k) * step);
  }
  if (tl.periods.back() != n) {
    tl.periods.push_back(n);
    tl.times.push_back(static_cast<double>(n) * step);
  }
  return tl;
}

std::optional<DrivingProtocol> protocol_of(const ScenarioConfig& c) {
  if (const auto* g = std::get_if<CanonicalGenerator>(&c.generator))
    return canonical_protocol({g->params, g->reversed, c.period, c.time.time_unit});
  if (const auto* g = std::get_if<SegmentsGenerator>(&c.generator)) return DrivingProtocol(g->segments, g->middle);
  return std::nullopt;
}

struct Evolution {
  Trajectory trajectory;
  Timeline timeline;
};

Evolution evolve(const ScenarioConfig& c, bool endpoints_only = false) {
  const Matrix2 rho0 = c.initial_state.rho0();
  const auto proto = protocol_of(c);
  const double step = proto ? proto->period() : *c.period;
  Timeline tl = timeline(c, step);
  if (endpoints_only) {
    tl.times = {tl.times.front(), tl.times.back()};
    tl.periods = {tl.periods.front(), tl.periods.back()};
  }
  if (proto) return {evolve_raw(*proto, rho0, tl.times), tl};
  const auto& st = std::get<StaticGenerator>(c.generator);
  return {evolve_raw(st.matrix, rho0, tl.times, st.alpha), tl};
}

// ---------------------------------------------------------------------------
// Modes

RunResult run_evolve(const ScenarioConfig& c, const std::filesystem::path& dir) {
  const Evolution ev = evolve(c);
  const Trajectory& tr = ev.trajectory;
  RunResult res;
  {
    std::ofstream out;
    const auto path = open_output(dir, c.outputs.csv, out);
    out << csv_header_comment(c) << kTrajectoryColumns << '\n';
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const auto& p = tr[i];
      out << row({static_cast<double>(ev.timeline.periods[i]), p.t, tr.alpha() * p.t, p.n_up, p.n_down, p.nbar_up,
                  p.nbar_down, p.entropy})
          << ',' << rho_cells(p.rho_bar) << '\n';
    }
    close_output(out, path);
    res.artifacts.push_back(path);
  }
  if (c.shots > 0) {
    const auto sampled = sample_trajectory(tr, {c.shots, c.seed, c.stream_id});
    std::ofstream out;
    const auto path = open_output(dir, c.outputs.sampled_csv, out);
    out << csv_header_comment(c) << kTrajectoryColumns << ",shots,seed\n";
    for (std::size_t i = 0; i < sampled.size(); ++i) {
      const auto& s = sampled[i];
      out << row({static_cast<double>(ev.timeline.periods[i]), s.t, tr.alpha() * s.t, s.raw.n_up, s.raw.n_down,
                  s.nbar_up, s.nbar_down, s.entropy})
          << ',' << rho_cells(s.tomography.rho_hat) << ',' << c.shots << ',' << c.seed << '\n';
    }
    close_output(out, path);
    res.artifacts.push_back(path);
  }

  const auto& last = tr.points().back();
  std::ostringstream os;
  os << "mode=" << to_string(c.mode) << " name=" << c.name << " points=" << tr.size()
     << " alpha_t_end=" << summary_number(tr.alpha() * last.t);
  if (c.mode == Mode::entropy) {
    double smin = 1.0;
    for (const auto& p : tr.points()) smin = std::min(smin, p.entropy);
    os << " S0=" << summary_number(tr[0].entropy) << " S_min=" << summary_number(smin)
       << " S_end=" << summary_number(last.entropy);
  } else {
    os << " nbar_up_end=" << summary_number(last.nbar_up) << " trace_end=" << summary_number(last.rho_raw.trace().real());
  }
  res.summary = os.str();
  return res;
}

RunResult run_eigenstates(const ScenarioConfig& c, const std::filesystem::path& dir) {
  const auto& g = std::get<CanonicalGenerator>(c.generator);
  std::ofstream out;
  const auto path = open_output(dir, c.outputs.csv, out);
  out << csv_header_comment(c)
      << "gamma_over_J,pop_up_plus,pop_up_minus,theta_plus,theta_minus,overlap,overlap_closed_form,converged,"
         "residual,periods_used\n";
  std::size_t converged = 0;
  double last_overlap = 0.0;
  for (double ratio : c.sweep.gamma_over_J) {
    const double gamma = ratio * g.params.J;
    const APTParams p{g.params.J, gamma, g.params.alpha, 0.0};
    const double step = c.period.value_or(default_period(p));
    const std::size_t n = horizon_periods(c.time, step, g.params.alpha);
    const EigenstateReport r = asymptotic_eigenstates(g.params.J, gamma, g.params.alpha, n, c.period);
    out << row({ratio, r.pop_up_plus, r.pop_up_minus, r.theta_plus, r.theta_minus, r.overlap, 1.0 / ratio,
                r.converged ? 1.0 : 0.0, r.residual, static_cast<double>(r.periods_used)})
        << '\n';
    converged += r.converged ? 1 : 0;
    last_overlap = r.overlap;
  }
  close_output(out, path);
  std::ostringstream os;
  os << "mode=eigenstates name=" << c.name << " points=" << c.sweep.gamma_over_J.size() << " converged=" << converged
     << " overlap_last=" << summary_number(last_overlap);
  return {os.str(), {path}};
}

RunResult run_spectrum(const ScenarioConfig& c, const std::filesystem::path& dir) {
  const auto& g = std::get<CanonicalGenerator>(c.generator);
  const double J = g.params.J;
  std::ofstream out;
  const auto path = open_output(dir, c.outputs.csv, out);
  out << csv_header_comment(c) << "gamma_over_J,delta_over_J,re_E_plus,im_E_plus,re_E_minus,im_E_minus\n";
  const auto deltas = c.spectrum.delta_over_J.values();
  std::size_t rows = 0;
  for (double gr : c.spectrum.gamma_over_J) {
    for (double dr : deltas) {
      const EigenPair e = detuned_eigenvalues(J, gr * J, dr * J, g.params.alpha);
      out << row({gr, dr, e.e_plus.real(), e.e_plus.imag(), e.e_minus.real(), e.e_minus.imag()}) << '\n';
      ++rows;
    }
  }
  close_output(out, path);
  std::ostringstream os;
  os << "mode=spectrum name=" << c.name << " rows=" << rows << " slices=" << c.spectrum.gamma_over_J.size();
  return {os.str(), {path}};
}

RunResult run_sheet(const ScenarioConfig& c, const std::filesystem::path& dir) {
  const auto& g = std::get<CanonicalGenerator>(c.generator);
  const SpectrumSheet sh =
      riemann_sheet_grid({c.sheet.delta_over_J.from, c.sheet.delta_over_J.to},
                         {c.sheet.gamma_over_J.from, c.sheet.gamma_over_J.to}, c.sheet.delta_over_J.points,
                         c.sheet.gamma_over_J.points, g.params.alpha, g.params.J);
  std::ofstream out;
  const auto path = open_output(dir, c.outputs.csv, out);
  out << csv_header_comment(c)
      << "delta_over_J,gamma_over_J,re_E_plus,im_E_plus,re_E_minus,im_E_minus,seam_flag\n";
  for (std::size_t r = 0; r < sh.rows(); ++r) {
    for (std::size_t col = 0; col < sh.cols(); ++col) {
      const std::size_t i = sh.index(r, col);
      out << row({sh.delta_over_J[col], sh.gamma_over_J[r], sh.plus[i].real(), sh.plus[i].imag(), sh.minus[i].real(),
                  sh.minus[i].imag()})
          << ',' << (sh.seam[i] ? 1 : 0) << '\n';
    }
  }
  close_output(out, path);
  const auto comps = seam_components(sh);
  double top = 0.0;
  for (const auto& comp : comps) {
    for (std::size_t i : comp) top = std::max(top, sh.gamma_over_J[i / sh.cols()]);
  }
  std::ostringstream os;
  os << "mode=sheet name=" << c.name << " grid=" << sh.cols() << "x" << sh.rows() << " seams=" << comps.size()
     << " seam_end_gamma_over_J=" << summary_number(top);
  return {os.str(), {path}};
}

RunResult run_wind(const ScenarioConfig& c, const std::filesystem::path& dir) {
  const auto& g = std::get<CanonicalGenerator>(c.generator);
  const LoopResult r = wind_around_ep({c.loop.center_delta, c.loop.center_gamma}, c.loop.radius, c.loop.steps,
                                      g.params.alpha, g.params.J, c.loop.turns);
  json doc = {{"config", to_json(c)},
              {"permutation", to_string(r.permutation)},
              {"steps", r.steps},
              {"min_gap", r.min_gap},
              {"winding_valid", r.winding_valid},
              {"max_step_ratio", r.max_step_ratio}};
  const auto path = write_text(dir, c.outputs.json, doc.dump(2) + "\n");
  std::ostringstream os;
  os << "mode=wind name=" << c.name << " permutation=" << to_string(r.permutation) << " steps=" << r.steps
     << " min_gap=" << summary_number(r.min_gap);
  return {os.str(), {path}};
}

json fit_json(const FitResult& f) {
  return {{"re_gap", f.re_gap},
          {"im_plus", f.im_plus},
          {"im_minus", f.im_minus},
          {"stderr", {{"re_gap", f.std_error.re_gap}, {"im_plus", f.std_error.im_plus}, {"im_minus", f.std_error.im_minus}}},
          {"residual_rms", f.residual_rms},
          {"converged", f.converged},
          {"degenerate", f.degenerate},
          {"model", to_string(f.model)},
          {"iterations", f.iterations}};
}

RunResult run_fit(const ScenarioConfig& c, const std::filesystem::path& dir) {
  const auto& g = std::get<CanonicalGenerator>(c.generator);
  const double J = g.params.J;
  json fits = json::array();
  std::uint64_t stream = c.stream_id;
  double worst = 0.0;
  for (double gr : c.fit.gamma_over_J) {
    for (double dr : c.fit.delta_over_J) {
      const APTParams p{J, gr * J, g.params.alpha, dr * J};
      const Trajectory traj = fit_trajectory(p, c.fit.design);
      const ShotConfig shots{c.shots, c.seed, stream++};
      const TraceSeries series = c.shots == 0 ? trace_series(traj) : trace_series(sample_trajectory(traj, shots), c.shots);
      PhaseHint hint = gr > 1.0 ? PhaseHint::preserving : PhaseHint::broken;
      if (c.fit.phase_hint == "broken") hint = PhaseHint::broken;
      if (c.fit.phase_hint == "preserving") hint = PhaseHint::preserving;
      const FitResult f = fit_eigenvalues(series, hint);
      const EigenPair e = detuned_eigenvalues(J, gr * J, dr * J, g.params.alpha);
      json entry = fit_json(f);
      entry["gamma_over_J"] = gr;
      entry["delta_over_J"] = dr;
      entry["stream_id"] = shots.stream_id;
      entry["closed_form"] = {{"im_plus", e.e_plus.imag()},
                              {"im_minus", e.e_minus.imag()},
                              {"re_gap", std::abs((e.e_plus - e.e_minus).real())}};
      worst = std::max(worst, std::abs(f.im_plus - e.e_plus.imag()) / std::abs(e.e_plus.imag()));
      fits.push_back(entry);
    }
  }
  const json doc = {{"config", to_json(c)}, {"fits", fits}};
  const auto path = write_text(dir, c.outputs.json, doc.dump(2) + "\n");
  std::ostringstream os;
  os << "mode=fit name=" << c.name << " fits=" << fits.size() << " shots=" << c.shots
     << " max_rel_err_im_plus=" << summary_number(worst);
  return {os.str(), {path}};
}

json abs_matrix(const Matrix2& m) {
  return json::array({std::abs(m(0, 0)), std::abs(m(0, 1)), std::abs(m(1, 0)), std::abs(m(1, 1))});
}

RunResult run_tomography(const ScenarioConfig& c, const std::filesystem::path& dir) {
  const Evolution ev = evolve(c, true);
  const auto& last = ev.trajectory.points().back();
  const TomographyRecord rec =
      simulate_tomography(last.rho_raw, {c.shots, c.seed, c.stream_id}, ev.timeline.periods.back());
  const json doc = {{"config", to_json(c)},
                    {"t", last.t},
                    {"alpha_t", ev.trajectory.alpha() * last.t},
                    {"rho_bar", matrix_to_json(last.rho_bar)},
                    {"abs_rho_bar", abs_matrix(last.rho_bar)},
                    {"rho_hat", matrix_to_json(rec.rho_hat)},
                    {"abs_rho_hat", abs_matrix(rec.rho_hat)},
                    {"expectation", rec.expectation},
                    {"standard_error", rec.standard_error},
                    {"trace_estimate", rec.trace_estimate},
                    {"psd_projected", rec.psd_projected},
                    {"shots", c.shots},
                    {"seed", c.seed}};
  const auto path = write_text(dir, c.outputs.json, doc.dump(2) + "\n");
  std::ostringstream os;
  os << "mode=tomography name=" << c.name << " alpha_t=" << summary_number(ev.trajectory.alpha() * last.t)
     << " frobenius_error=" << summary_number(distance(rec.rho_hat, last.rho_bar))
     << " psd_projected=" << (rec.psd_projected ? "true" : "false");
  return {os.str(), {path}};
}

}  // namespace

SchemaError::SchemaError(std::string field, const std::string& message)
    : std::runtime_error((field.empty() ? std::string("config") : field) + ": " + message), field_(std::move(field)) {}

const char* to_string(Mode m) {
  switch (m) {
    case Mode::evolve: return "evolve";
    case Mode::entropy: return "entropy";
    case Mode::eigenstates: return "eigenstates";
    case Mode::spectrum: return "spectrum";
    case Mode::sheet: return "sheet";
    case Mode::wind: return "wind";
    case Mode::fit: return "fit";
    case Mode::tomography: return "tomography";
  }
  return "unknown";
}

std::string format_number(double x) {
  if (x == 0.0) return "0";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::vector<double> Range::values() const {
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i) {
    out[i] = i + 1 == points ? to : from + (to - from) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return out;
}

Matrix2 StateSpec::rho0() const {
  switch (kind) {
    case Kind::named: return Matrix2::projector(*named_state(name));
    case Kind::amplitudes: return Matrix2::projector(amplitudes);
    case Kind::mixture: return MixedState(psi1, psi2, beta).rho0();
  }
  return {};
}

json matrix_to_json(const Matrix2& m) {
  json out = json::array();
  for (const Complex& z : m.entries()) out.push_back(complex_json(z));
  return out;
}

Matrix2 matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 4) throw SchemaError(field, "expected four [re, im] pairs, row-major");
  Matrix2 m;
  for (int k = 0; k < 4; ++k) m(k / 2, k % 2) = complex_value(j[static_cast<std::size_t>(k)], field + "[" + std::to_string(k) + "]");
  return m;
}

ScenarioConfig parse_config(const json& doc) {
  require_object(doc, "");
  allow_keys(doc, "",
             {"name", "figure", "description", "mode", "generator", "period", "initial_state", "time", "shots", "seed",
              "stream_id", "sweep", "spectrum", "sheet", "loop", "fit", "outputs"});
  ScenarioConfig c;
  if (!doc.contains("mode")) throw SchemaError("mode", "required");
  c.mode = parse_mode(doc.at("mode"));
  if (doc.contains("name")) c.name = string_value(doc.at("name"), "name");
  if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos)
    throw SchemaError("name", "must be a non-empty file stem");
  if (doc.contains("figure")) c.figure = string_value(doc.at("figure"), "figure");
  if (doc.contains("description")) c.description = string_value(doc.at("description"), "description");

  if (!doc.contains("generator")) {
    if (!is_sweep_mode(c.mode)) throw SchemaError("generator", "required");
    c.generator = CanonicalGenerator{};
  } else {
    c.generator = parse_generator(doc.at("generator"), c.mode);
  }

  const bool is_static = std::holds_alternative<StaticGenerator>(c.generator);
  const bool is_segments = std::holds_alternative<SegmentsGenerator>(c.generator);
  if (doc.contains("period")) {
    if (is_segments) throw SchemaError("period", "not allowed with explicit segments (the period is their total duration)");
    if (c.mode == Mode::spectrum || c.mode == Mode::sheet || c.mode == Mode::wind || c.mode == Mode::fit)
      throw SchemaError("period", std::string("not used by ") + to_string(c.mode) + " mode");
    const double p = number(doc.at("period"), "period");
    if (!(p > 0.0)) throw SchemaError("period", "must be > 0");
    c.period = p;
  } else if (is_static) {
    throw SchemaError("period", "required with a static generator (sampling step)");
  }

  auto reject = [&](const char* key, bool used) {
    if (doc.contains(key) && !used) throw SchemaError(key, std::string("not used by ") + to_string(c.mode) + " mode");
  };
  reject("initial_state", uses_state(c.mode));
  reject("time", uses_time(c.mode));
  reject("shots", uses_shots(c.mode));
  reject("seed", uses_shots(c.mode));
  reject("stream_id", uses_shots(c.mode));
  reject("sweep", c.mode == Mode::eigenstates);
  reject("spectrum", c.mode == Mode::spectrum);
  reject("sheet", c.mode == Mode::sheet);
  reject("loop", c.mode == Mode::wind);
  reject("fit", c.mode == Mode::fit);

  if (uses_state(c.mode)) {
    if (!doc.contains("initial_state")) throw SchemaError("initial_state", "required");
    c.initial_state = parse_state(doc.at("initial_state"), "initial_state");
  }

  if (uses_time(c.mode)) {
    if (!doc.contains("time")) throw SchemaError("time", "required");
    const json& t = require_object(doc.at("time"), "time");
    allow_keys(t, "time", {"horizon_periods", "horizon_alpha_t", "record_every", "time_unit"});
    if (t.contains("horizon_periods") == t.contains("horizon_alpha_t"))
      throw SchemaError("time", "exactly one of horizon_periods, horizon_alpha_t is required");
    if (t.contains("horizon_periods")) {
      c.time.horizon_periods = unsigned_integer(t.at("horizon_periods"), "time.horizon_periods");
      if (*c.time.horizon_periods < 1) throw SchemaError("time.horizon_periods", "must be >= 1");
    } else {
      c.time.horizon_alpha_t = number(t.at("horizon_alpha_t"), "time.horizon_alpha_t");
      if (!(*c.time.horizon_alpha_t > 0.0)) throw SchemaError("time.horizon_alpha_t", "must be > 0");
    }
    if (t.contains("record_every")) {
      c.time.record_every = unsigned_integer(t.at("record_every"), "time.record_every");
      if (c.time.record_every < 1) throw SchemaError("time.record_every", "must be >= 1");
    }
    if (t.contains("time_unit")) c.time.time_unit = string_value(t.at("time_unit"), "time.time_unit");
  }

  if (uses_shots(c.mode)) {
    c.shots = (c.mode == Mode::fit || c.mode == Mode::tomography) ? 1000 : 0;
    if (doc.contains("shots")) {
      const std::uint64_t s = unsigned_integer(doc.at("shots"), "shots");
      if (s > 100000000) throw SchemaError("shots", "must be <= 1e8 (0 selects exact expectations)");
      c.shots = static_cast<std::uint32_t>(s);
    }
    if (doc.contains("seed")) c.seed = unsigned_integer(doc.at("seed"), "seed");
    if (doc.contains("stream_id")) c.stream_id = unsigned_integer(doc.at("stream_id"), "stream_id");
  }

  if (c.mode == Mode::eigenstates) {
    if (!doc.contains("sweep")) throw SchemaError("sweep", "required");
    const json& s = require_object(doc.at("sweep"), "sweep");
    allow_keys(s, "sweep", {"gamma_over_J"});
    if (!s.contains("gamma_over_J")) throw SchemaError("sweep.gamma_over_J", "required");
    c.sweep.gamma_over_J = parse_axis(s.at("gamma_over_J"), "sweep.gamma_over_J");
    for (double g : c.sweep.gamma_over_J) {
      if (!(g > 1.0)) throw SchemaError("sweep.gamma_over_J", "eigenstate extraction needs Gamma/J > 1");
    }
  }
  if (c.mode == Mode::spectrum) {
    if (!doc.contains("spectrum")) throw SchemaError("spectrum", "required");
    const json& s = require_object(doc.at("spectrum"), "spectrum");
    allow_keys(s, "spectrum", {"gamma_over_J", "delta_over_J"});
    if (!s.contains("gamma_over_J")) throw SchemaError("spectrum.gamma_over_J", "required");
    c.spectrum.gamma_over_J = number_list(s.at("gamma_over_J"), "spectrum.gamma_over_J");
    for (double g : c.spectrum.gamma_over_J) {
      if (!(g >= 0.0)) throw SchemaError("spectrum.gamma_over_J", "values must be >= 0");
    }
    if (s.contains("delta_over_J")) c.spectrum.delta_over_J = parse_range(s.at("delta_over_J"), "spectrum.delta_over_J");
  }
  if (c.mode == Mode::sheet && doc.contains("sheet")) {
    const json& s = require_object(doc.at("sheet"), "sheet");
    allow_keys(s, "sheet", {"delta_over_J", "gamma_over_J"});
    if (s.contains("delta_over_J")) c.sheet.delta_over_J = parse_range(s.at("delta_over_J"), "sheet.delta_over_J");
    if (s.contains("gamma_over_J")) c.sheet.gamma_over_J = parse_range(s.at("gamma_over_J"), "sheet.gamma_over_J");
    if (c.sheet.gamma_over_J.from < 0.0) throw SchemaError("sheet.gamma_over_J.from", "must be >= 0");
  }
  if (c.mode == Mode::wind && doc.contains("loop")) {
    const json& l = require_object(doc.at("loop"), "loop");
    allow_keys(l, "loop", {"center", "radius", "steps", "turns"});
    if (l.contains("center")) {
      const json& ce = l.at("center");
      if (!ce.is_array() || ce.size() != 2) throw SchemaError("loop.center", "expected [delta/J, Gamma/J]");
      c.loop.center_delta = number(ce[0], "loop.center[0]");
      c.loop.center_gamma = number(ce[1], "loop.center[1]");
    }
    c.loop.radius = number_or(l, "radius", "loop", c.loop.radius);
    if (!(c.loop.radius > 0.0)) throw SchemaError("loop.radius", "must be > 0");
    if (l.contains("steps")) c.loop.steps = unsigned_integer(l.at("steps"), "loop.steps");
    if (c.loop.steps < 64) throw SchemaError("loop.steps", "must be >= 64");
    if (l.contains("turns")) {
      const std::uint64_t t = unsigned_integer(l.at("turns"), "loop.turns");
      if (t < 1 || t > 1000) throw SchemaError("loop.turns", "must lie in [1, 1000]");
      c.loop.turns = static_cast<int>(t);
    }
  }
  if (c.mode == Mode::fit) {
    if (!doc.contains("fit")) throw SchemaError("fit", "required");
    const json& f = require_object(doc.at("fit"), "fit");
    allow_keys(f, "fit", {"gamma_over_J", "delta_over_J", "design", "phase_hint"});
    if (!f.contains("gamma_over_J")) throw SchemaError("fit.gamma_over_J", "required");
    if (!f.contains("delta_over_J")) throw SchemaError("fit.delta_over_J", "required");
    c.fit.gamma_over_J = parse_axis(f.at("gamma_over_J"), "fit.gamma_over_J");
    c.fit.delta_over_J = parse_axis(f.at("delta_over_J"), "fit.delta_over_J");
    for (double g : c.fit.gamma_over_J) {
      if (!(g >= 0.0)) throw SchemaError("fit.gamma_over_J", "values must be >= 0");
    }
    if (f.contains("design")) {
      const json& d = require_object(f.at("design"), "fit.design");
      allow_keys(d, "fit.design", {"period", "t_max"});
      c.fit.design.period = number_or(d, "period", "fit.design", c.fit.design.period);
      c.fit.design.t_max = number_or(d, "t_max", "fit.design", c.fit.design.t_max);
      if (!(c.fit.design.period > 0.0)) throw SchemaError("fit.design.period", "must be > 0");
      if (!(c.fit.design.t_max >= 12.0 * c.fit.design.period))
        throw SchemaError("fit.design.t_max", "must cover at least 12 periods");
    }
    if (f.contains("phase_hint")) {
      c.fit.phase_hint = string_value(f.at("phase_hint"), "fit.phase_hint");
      if (c.fit.phase_hint != "auto" && c.fit.phase_hint != "broken" && c.fit.phase_hint != "preserving")
        throw SchemaError("fit.phase_hint", "expected auto, broken or preserving");
    }
  }

  const bool csv_mode = c.mode != Mode::wind && c.mode != Mode::fit && c.mode != Mode::tomography;
  const bool sampled = (c.mode == Mode::evolve || c.mode == Mode::entropy) && c.shots > 0;
  if (csv_mode) c.outputs.csv = c.name + ".csv";
  else c.outputs.json = c.name + ".json";
  if (sampled) c.outputs.sampled_csv = c.name + "_sampled.csv";
  if (doc.contains("outputs")) {
    const json& o = require_object(doc.at("outputs"), "outputs");
    allow_keys(o, "outputs", {"csv", "json", "sampled_csv"});
    auto take = [&](const char* key, std::string& slot, bool used) {
      if (!o.contains(key)) return;
      if (!used) throw SchemaError(join("outputs", key), std::string("not produced by ") + to_string(c.mode) + " mode");
      slot = string_value(o.at(key), join("outputs", key));
      if (slot.empty()) throw SchemaError(join("outputs", key), "must be a non-empty path");
    };
    take("csv", c.outputs.csv, csv_mode);
    take("json", c.outputs.json, !csv_mode);
    take("sampled_csv", c.outputs.sampled_csv, sampled);
  }
  return c;
}

json to_json(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  if (!c.figure.empty()) j["figure"] = c.figure;
  if (!c.description.empty()) j["description"] = c.description;
  j["mode"] = to_string(c.mode);
  j["generator"] = generator_json(c.generator, c.mode);
  if (c.period) j["period"] = *c.period;
  if (uses_state(c.mode)) j["initial_state"] = state_json(c.initial_state);
  if (uses_time(c.mode)) {
    json t;
    if (c.time.horizon_periods) t["horizon_periods"] = *c.time.horizon_periods;
    if (c.time.horizon_alpha_t) t["horizon_alpha_t"] = *c.time.horizon_alpha_t;
    t["record_every"] = c.time.record_every;
    t["time_unit"] = c.time.time_unit;
    j["time"] = t;
  }
  if (uses_shots(c.mode)) {
    j["shots"] = c.shots;
    j["seed"] = c.seed;
    j["stream_id"] = c.stream_id;
  }
  switch (c.mode) {
    case Mode::eigenstates: j["sweep"] = {{"gamma_over_J", c.sweep.gamma_over_J}}; break;
    case Mode::spectrum:
      j["spectrum"] = {{"gamma_over_J", c.spectrum.gamma_over_J}, {"delta_over_J", range_json(c.spectrum.delta_over_J)}};
      break;
    case Mode::sheet:
      j["sheet"] = {{"delta_over_J", range_json(c.sheet.delta_over_J)}, {"gamma_over_J", range_json(c.sheet.gamma_over_J)}};
      break;
    case Mode::wind:
      j["loop"] = {{"center", {c.loop.center_delta, c.loop.center_gamma}},
                   {"radius", c.loop.radius},
                   {"steps", c.loop.steps},
                   {"turns", c.loop.turns}};
      break;
    case Mode::fit:
      j["fit"] = {{"gamma_over_J", c.fit.gamma_over_J},
                  {"delta_over_J", c.fit.delta_over_J},
                  {"design", {{"period", c.fit.design.period}, {"t_max", c.fit.design.t_max}}},
                  {"phase_hint", c.fit.phase_hint}};
      break;
    default: break;
  }
  json o = json::object();
  if (!c.outputs.csv.empty()) o["csv"] = c.outputs.csv;
  if (!c.outputs.json.empty()) o["json"] = c.outputs.json;
  if (!c.outputs.sampled_csv.empty()) o["sampled_csv"] = c.outputs.sampled_csv;
  j["outputs"] = o;
  return j;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

RunResult run(const ScenarioConfig& c, const std::filesystem::path& out_dir) {
  switch (c.mode) {
    case Mode::evolve:
    case Mode::entropy: return run_evolve(c, out_dir);
    case Mode::eigenstates: return run_eigenstates(c, out_dir);
    case Mode::spectrum: return run_spectrum(c, out_dir);
    case Mode::sheet: return run_sheet(c, out_dir);
    case Mode::wind: return run_wind(c, out_dir);
    case Mode::fit: return run_fit(c, out_dir);
    case Mode::tomography: return run_tomography(c, out_dir);
  }
  throw SchemaError("mode", "unhandled mode");
}

std::vector<PresetInfo> list_presets(const std::filesystem::path& dir, const std::string& filter) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("preset directory not found: " + dir.string());
  std::vector<PresetInfo> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    const std::string stem = entry.path().stem().string();
    if (!filter.empty() && stem.find(filter) == std::string::npos) continue;
    const ScenarioConfig c = load_config(entry.path());
    out.push_back({stem, c.figure, c.description, entry.path()});
  }
  std::sort(out.begin(), out.end(), [](const PresetInfo& a, const PresetInfo& b) { return a.name < b.name; });
  return out;
}

}  // namespace apt::scenario
