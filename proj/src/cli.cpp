#include "perflat/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "perflat/axioms.hpp"
#include "perflat/dividends.hpp"
#include "perflat/dynamics.hpp"
#include "perflat/io.hpp"
#include "perflat/risk_family.hpp"

#ifndef PERFLAT_SOURCE_DIR
#define PERFLAT_SOURCE_DIR "."
#endif

namespace perflat::cli {

namespace {

using nlohmann::json;

struct Config {
  std::string space_path, measure_path, var_path, dividends_path, output_path;
  std::string format = "text";
  std::size_t t = 0;
  double z = std::nan("");
  double z_min = std::nan(""), z_max = std::nan("");
  std::size_t z_steps = 0;
  std::vector<double> z_list;
  Tolerances tol;
  std::size_t trials = 500;
  std::uint64_t seed = 1;
  std::size_t search_budget = 0;
  std::string witness_out;
  bool check = false;
  std::string fixtures = std::string(PERFLAT_SOURCE_DIR) + "/fixtures";
  bool update = false;
};

std::string num_text(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

SpacePtr load_space(const std::string& path) {
  return io::parse_space(io::read_json_file(path), std::filesystem::path(path).stem().string());
}

MeasurePtr load_measure(const std::string& path, const SpacePtr& sp, const Tolerances& tol) {
  return make_measure(io::parse_measure(io::read_json_file(path), *sp), sp, tol.eps_strict);
}

XVar load_var(const std::string& path, const SpacePtr& sp) {
  return io::parse_xvar(io::read_json_file(path), sp);
}

/// Writes to --output when given, otherwise to `out`.
void emit(const Config& c, std::ostream& out, const std::string& text) {
  if (c.output_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(c.output_path);
  if (!f) throw DomainError("cannot write " + c.output_path);
  f << text;
}

std::string tvar_text(const TVar& v) {
  std::ostringstream os;
  for (std::size_t a = 0; a < v.size(); ++a)
    os << FilteredSpace::atom_id(v.stage(), a) << ' ' << num_text(v[a]) << '\n';
  return os.str();
}

void emit_tvar(const Config& c, std::ostream& out, const TVar& v, json meta) {
  if (c.format == "json") {
    json j = io::tvar_to_json(v);
    for (auto it = meta.begin(); it != meta.end(); ++it) j[it.key()] = it.value();
    emit(c, out, io::dump(j) + "\n");
  } else {
    emit(c, out, tvar_text(v));
  }
}

std::vector<double> z_grid(const Config& c) {
  if (!c.z_list.empty()) return c.z_list;
  if (std::isnan(c.z_min) || std::isnan(c.z_max) || c.z_steps == 0)
    throw DomainError("give --z-list or all of --z-min, --z-max, --z-steps");
  if (c.z_steps == 1) return {c.z_min};
  if (!(c.z_max > c.z_min)) throw DomainError("--z-max must exceed --z-min");
  std::vector<double> g(c.z_steps);
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = c.z_min + (c.z_max - c.z_min) * static_cast<double>(i) / static_cast<double>(c.z_steps - 1);
  return g;
}

std::string report_summary(const Report& r) {
  std::ostringstream os;
  os << r.subject << ": " << (r.passed() ? "PASS" : "FAIL") << '\n';
  for (const auto& c : r.checks) {
    os << "  " << (c.passed ? "ok   " : "FAIL ") << c.name << " (checked " << c.checked;
    if (c.ties) os << ", ties " << c.ties;
    os << ")";
    if (!c.detail.empty()) os << ": " << c.detail;
    os << '\n';
  }
  return os.str();
}

void emit_report(const Config& c, std::ostream& out, const json& j, const std::string& summary) {
  if (c.format == "json") {
    emit(c, out, io::dump(j) + "\n");
    return;
  }
  out << summary;
  if (!c.output_path.empty()) {
    std::ofstream f(c.output_path);
    if (!f) throw DomainError("cannot write " + c.output_path);
    f << io::dump(j) << '\n';
  }
}

// ---- commands -----------------------------------------------------------------

int cmd_validate_space(const Config& c, std::ostream& out) {
  SpacePtr sp = load_space(c.space_path);
  if (c.format == "json") {
    emit(c, out, io::dump({{"valid", true}, {"space", io::space_to_json(*sp)}}) + "\n");
  } else {
    std::ostringstream os;
    os << "valid space '" << sp->name() << "': T=" << sp->horizon() << ", " << sp->leaf_count()
       << " leaves\n";
    emit(c, out, os.str());
  }
  return 0;
}

int cmd_evaluate(const Config& c, std::ostream& out) {
  SpacePtr sp = load_space(c.space_path);
  MeasurePtr m = load_measure(c.measure_path, sp, c.tol);
  XVar x = load_var(c.var_path, sp);
  emit_tvar(c, out, m->evaluate(c.t, x), {{"measure", m->name()}});
  return 0;
}

int cmd_induce(const Config& c, std::ostream& out) {
  if (std::isnan(c.z)) throw DomainError("--z is required");
  SpacePtr sp = load_space(c.space_path);
  MeasurePtr m = load_measure(c.measure_path, sp, c.tol);
  XVar x = load_var(c.var_path, sp);
  emit_tvar(c, out, induce_risk(*m, c.t, c.z, x, c.tol),
            {{"measure", m->name()}, {"z", c.z}, {"tol_c", c.tol.tol_c}});
  return 0;
}

int cmd_curve(const Config& c, std::ostream& out) {
  SpacePtr sp = load_space(c.space_path);
  MeasurePtr m = load_measure(c.measure_path, sp, c.tol);
  XVar x = load_var(c.var_path, sp);
  std::vector<double> grid = z_grid(c);
  RiskCurve curve = risk_curve(*m, c.t, x, grid, c.tol, false);
  if (c.format == "json") {
    json rows = json::array();
    for (std::size_t i = 0; i < grid.size(); ++i)
      rows.push_back({{"z", grid[i]}, {"rho", values_json(curve.values[i].values())}});
    json atoms = json::array();
    for (std::size_t a = 0; a < sp->atom_count(c.t); ++a) atoms.push_back(FilteredSpace::atom_id(c.t, a));
    json j{{"measure", m->name()}, {"t", c.t}, {"atoms", atoms}, {"curve", rows},
           {"monotone", curve.monotone}};
    if (!curve.monotone) j["monotone_witness"] = curve.monotone_witness;
    emit(c, out, io::dump(j) + "\n");
  } else {
    std::ostringstream os;
    os << "atom_id,z,rho\n";
    for (std::size_t a = 0; a < sp->atom_count(c.t); ++a)
      for (std::size_t i = 0; i < grid.size(); ++i)
        os << FilteredSpace::atom_id(c.t, a) << ',' << num_text(grid[i]) << ','
           << num_text(curve.values[i][a]) << '\n';
    emit(c, out, os.str());
  }
  return 0;
}

int cmd_reconstruct(const Config& c, std::ostream& out) {
  SpacePtr sp = load_space(c.space_path);
  MeasurePtr m = load_measure(c.measure_path, sp, c.tol);
  XVar x = load_var(c.var_path, sp);
  TVar r = reconstruct(induced_family(m, c.tol), c.t, x, c.tol);
  emit_tvar(c, out, r, {{"measure", m->name()}, {"direct", values_json(m->evaluate(c.t, x).values())}});
  return 0;
}

int cmd_dual(const Config& c, std::ostream& out) {
  if (std::isnan(c.z)) throw DomainError("--z is required");
  SpacePtr sp = load_space(c.space_path);
  XVar x = load_var(c.var_path, sp);
  DualSolution d = glr_dual_solve(c.t, c.z, x);
  if (c.format == "json") {
    json q = json::object();
    for (std::size_t i = 0; i < d.q.size(); ++i) q[sp->leaf_ids()[i]] = d.q[i];
    json j = io::tvar_to_json(d.rho);
    j["z"] = c.z;
    j["q"] = q;
    emit(c, out, io::dump(j) + "\n");
  } else {
    emit(c, out, tvar_text(d.rho));
  }
  return 0;
}

int cmd_check_axioms(const Config& c, std::ostream& out) {
  SpacePtr sp = load_space(c.space_path);
  MeasurePtr m = load_measure(c.measure_path, sp, c.tol);
  Report r = check_axioms(*m, c.t, c.trials, c.seed, c.tol);
  Report s = check_scale_invariance(*m, c.t, std::min<std::size_t>(c.trials, 200), c.seed);
  json j{{"axioms", r.to_json()}, {"scale_invariance", s.to_json()}, {"seed", c.seed}};
  emit_report(c, out, j, report_summary(r) + report_summary(s));
  return 0;
}

int cmd_check_consistency(const Config& c, std::ostream& out) {
  SpacePtr sp = load_space(c.space_path);
  DynamicMeasure d(load_measure(c.measure_path, sp, c.tol));
  std::vector<double> grid = z_grid(c);
  ConsistencyReport r = check_time_consistency(d, grid, c.trials, c.seed, c.tol);
  json j{{"sampled", r.to_json()}, {"seed", c.seed}, {"trials", c.trials}};
  std::string summary = report_summary(r.report);
  std::optional<Witness> w = r.witness;
  if (c.search_budget > 0) {
    ConsistencyReport s = search_counterexample(d, c.search_budget, c.seed);
    j["search"] = s.to_json();
    summary += report_summary(s.report);
    if (s.witness && (!w || s.witness->margin > w->margin)) w = s.witness;
  }
  summary += w ? "verdict: counterexample (margin " + num_text(w->margin) + ")\n"
               : "verdict: consistent-on-sample\n";
  if (w && !c.witness_out.empty()) {
    json wj = io::xvar_to_json(w->x);
    wj["witness"] = w->to_json();
    io::write_json_file(c.witness_out, wj);
  }
  emit_report(c, out, j, summary);
  return 0;
}

int cmd_lift(const Config& c, std::ostream& out) {
  SpacePtr sp = load_space(c.space_path);
  MeasurePtr m = load_measure(c.measure_path, sp, c.tol);
  if (c.check) {
    Report r = check_lift_axioms(*m, c.trials, c.seed);
    emit_report(c, out, r.to_json(), report_summary(r));
    return 0;
  }
  if (c.dividends_path.empty()) throw DomainError("--dividends is required unless --check is given");
  DividendProcess d = io::parse_dividends(io::read_json_file(c.dividends_path), sp);
  emit_tvar(c, out, lift_evaluate(*m, c.t, d), {{"measure", m->name()}});
  return 0;
}

int cmd_paper_demo(const Config& c, std::ostream& out, std::ostream& err) {
  json actual = paper_demo(c.fixtures);
  std::filesystem::path pinned = std::filesystem::path(c.fixtures) / "paper_demo.json";
  if (c.update) {
    io::write_json_file(pinned, actual);
    out << "wrote " << pinned.string() << '\n';
    return 0;
  }
  json expected = io::read_json_file(pinned);
  std::vector<std::string> diffs;
  bool ok = json_close(expected, actual, 1e-9, diffs);
  if (c.format == "json") {
    out << io::dump({{"passed", ok}, {"diffs", diffs}, {"values", actual}}) << '\n';
  } else {
    for (const auto& d : diffs) err << "mismatch " << d << '\n';
    out << "paper-demo: " << (ok ? "PASS" : "FAIL") << " (" << diffs.size() << " mismatches)\n";
  }
  return ok ? 0 : 1;
}

json error_json(const Error& e) {
  json j{{"error", e.kind()}, {"message", e.what()}};
  if (auto* v = dynamic_cast<const ValidationError*>(&e)) j["invariant"] = v->invariant();
  if (auto* p = dynamic_cast<const ParseError*>(&e)) {
    j["field"] = p->field();
    if (p->line() >= 0) j["line"] = p->line();
  }
  return j;
}

}  // namespace

bool json_close(const json& expected, const json& actual, double rel_tol,
                std::vector<std::string>& diffs, const std::string& path) {
  const std::string where = path.empty() ? "/" : path;
  if (expected.is_number() && actual.is_number()) {
    double a = expected.get<double>(), b = actual.get<double>();
    if (std::fabs(a - b) <= rel_tol * std::max(1.0, std::fabs(a))) return true;
    diffs.push_back(where + ": " + num_text(a) + " vs " + num_text(b));
    return false;
  }
  if (expected.type() != actual.type()) {
    diffs.push_back(where + ": " + expected.dump() + " vs " + actual.dump());
    return false;
  }
  bool ok = true;
  if (expected.is_object()) {
    for (auto it = expected.begin(); it != expected.end(); ++it) {
      if (!actual.contains(it.key())) {
        diffs.push_back(path + "/" + it.key() + ": missing");
        ok = false;
        continue;
      }
      ok = json_close(it.value(), actual[it.key()], rel_tol, diffs, path + "/" + it.key()) && ok;
    }
    for (auto it = actual.begin(); it != actual.end(); ++it)
      if (!expected.contains(it.key())) {
        diffs.push_back(path + "/" + it.key() + ": unexpected");
        ok = false;
      }
    return ok;
  }
  if (expected.is_array()) {
    if (expected.size() != actual.size()) {
      diffs.push_back(where + ": length " + std::to_string(expected.size()) + " vs " +
                      std::to_string(actual.size()));
      return false;
    }
    for (std::size_t i = 0; i < expected.size(); ++i)
      ok = json_close(expected[i], actual[i], rel_tol, diffs, path + "/" + std::to_string(i)) && ok;
    return ok;
  }
  if (expected != actual) {
    diffs.push_back(where + ": " + expected.dump() + " vs " + actual.dump());
    return false;
  }
  return true;
}

json paper_demo(const std::filesystem::path& fixtures) {
  json j;
  SpacePtr coin = make_coin_space();
  MeasurePtr glr = make_measure(MeasureSpec::glr(), coin);
  MeasurePtr expu = make_measure(MeasureSpec::exp_utility(1.0), coin);
  XVar x31(coin, {3.0, -1.0});
  XVar x11(coin, {1.0, -1.0});
  XVar zero = XVar::constant(coin, 0.0);

  json g;
  g["value_x_3_m1"] = num_json(glr->evaluate(0, x31)[0]);
  g["value_at_0"] = num_json(glr->evaluate(0, zero)[0]);
  g["value_at_tenth"] = num_json(glr->evaluate(0, XVar::constant(coin, 0.1))[0]);
  g["rho_z2_x_3_m1"] = num_json(induce_risk(*glr, 0, 2.0, x31)[0]);
  g["rho_z1_at_0"] = num_json(induce_risk(*glr, 0, 1.0, zero)[0]);
  g["rho_z2_at_0"] = num_json(induce_risk(*glr, 0, 2.0, zero)[0]);
  g["dual_z1_x_1_m1"] = num_json(glr_dual_risk(0, 1.0, x11)[0]);
  g["reconstruct_x_3_m1"] = num_json(reconstruct(induced_family(glr), 0, x31)[0]);
  j["glr"] = g;

  json e;
  TVar one = TVar::constant(coin, 0, 1.0);
  e["rho0_z_half"] = num_json(entropic_closed_form(one, 0.5, zero)[0]);
  e["rho0_z_1_minus_inv_e"] = num_json(entropic_closed_form(one, 1.0 - std::exp(-1.0), zero)[0]);
  e["rho_z0_x_1_m1"] = num_json(entropic_closed_form(one, 0.0, x11)[0]);
  e["induced_z0_x_1_m1"] = num_json(induce_risk(*expu, 0, 0.0, x11)[0]);
  j["entropic"] = e;

  SpacePtr bin = make_binomial_tree(2);
  DynamicMeasure lpm(make_measure(MeasureSpec::lpm_ratio(2.0), bin));
  json fw = io::read_json_file(fixtures / "lpm_binomial_witness.json");
  const json& wj = fw.at("witness");
  Witness w{io::parse_xvar(fw, bin), wj.at("s").get<std::size_t>(), wj.at("t").get<std::size_t>(),
            io::read_ext(wj.at("z"), "witness.z"), 0, 0.0};
  w.atom_s = bin->resolve_atom(w.s, wj.at("atom_s").get<std::string>()).value();
  TVar bs = lpm.evaluate(w.s, w.x), bt = lpm.evaluate(w.t, w.x);
  double low = kInf;
  for (std::size_t a : bin->descendants(w.s, w.atom_s, w.t)) low = std::min(low, bt[a]);
  j["lpm_witness"] = {{"beta_s", num_json(bs[w.atom_s])},
                      {"min_beta_t_below", num_json(low)},
                      {"margin", num_json(std::min(low - w.z, w.z - bs[w.atom_s]))},
                      {"verified", verify_witness(lpm, w, 1e-12)}};

  SpacePtr b3 = make_binomial_tree(3, 0.6);
  MeasurePtr ce = make_measure(MeasureSpec::certainty_equivalent(Utility::exponential(1.0)), b3);
  std::vector<double> v(b3->leaf_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i) - 3.0;
  XVar x(b3, v);
  TVar c1 = ce->evaluate(1, x);
  j["certainty_equivalent"] = {{"c0", num_json(ce->evaluate(0, x)[0])},
                               {"c0_of_c1", num_json(ce->evaluate(0, c1.to_xvar())[0])}};
  return j;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Config c;
  CLI::App app{"perflat: conditional performance measures on finite scenario trees"};
  app.name(args.empty() ? "perflat" : args.front());
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  auto tolerances = [&](CLI::App* s) {
    s->add_option("--tol-c", c.tol.tol_c, "cash bisection tolerance");
    s->add_option("--tol-z", c.tol.tol_z, "level bisection tolerance");
    s->add_option("--eps-strict", c.tol.eps_strict, "strictness band");
  };
  auto fmt = [&](CLI::App* s, std::vector<std::string> allowed) {
    s->add_option("--format", c.format, "output format")->check(CLI::IsMember(allowed));
    s->add_option("-o,--output", c.output_path, "write the artifact to this file");
  };
  auto inputs = [&](CLI::App* s, bool measure, bool var) {
    s->add_option("--space", c.space_path, "space JSON")->required();
    if (measure) s->add_option("--measure", c.measure_path, "measure JSON")->required();
    if (var) s->add_option("--var", c.var_path, "variable JSON")->required();
    s->add_option("--t", c.t, "stage");
  };
  auto grid = [&](CLI::App* s) {
    s->add_option("--z-min", c.z_min);
    s->add_option("--z-max", c.z_max);
    s->add_option("--z-steps", c.z_steps);
    s->add_option("--z-list,--z-grid", c.z_list, "comma separated levels")->delimiter(',');
  };
  auto sampling = [&](CLI::App* s) {
    s->add_option("--trials", c.trials)->check(CLI::PositiveNumber);
    s->add_option("--seed", c.seed);
  };

  auto* vs = app.add_subcommand("validate-space", "check a space file");
  vs->add_option("space", c.space_path, "space JSON")->required();
  fmt(vs, {"text", "json"});

  auto* ev = app.add_subcommand("evaluate", "beta_t(X) per atom");
  inputs(ev, true, true);
  tolerances(ev);
  fmt(ev, {"text", "json"});

  auto* in = app.add_subcommand("induce", "rho_t^z(X) per atom");
  inputs(in, true, true);
  in->add_option("--z", c.z, "level")->required();
  tolerances(in);
  fmt(in, {"text", "json"});

  auto* cu = app.add_subcommand("curve", "rho_t^z(X) over a level grid");
  inputs(cu, true, true);
  grid(cu);
  tolerances(cu);
  fmt(cu, {"csv", "json"});

  auto* re = app.add_subcommand("reconstruct", "beta_t(X) rebuilt from the induced risks");
  inputs(re, true, true);
  tolerances(re);
  fmt(re, {"text", "json"});

  auto* du = app.add_subcommand("dual", "GLR risk through the dual linear program");
  inputs(du, false, true);
  du->add_option("--z", c.z, "level")->required();
  fmt(du, {"text", "json"});

  auto* ax = app.add_subcommand("check-axioms", "property tests of the measure axioms");
  inputs(ax, true, false);
  sampling(ax);
  tolerances(ax);
  fmt(ax, {"text", "json"});

  auto* co = app.add_subcommand("check-consistency", "time consistency report");
  inputs(co, true, false);
  grid(co);
  sampling(co);
  co->add_option("--search-budget", c.search_budget, "counterexample search evaluations");
  co->add_option("--witness-out", c.witness_out, "write the witness variable here");
  tolerances(co);
  fmt(co, {"text", "json"});

  auto* li = app.add_subcommand("lift", "evaluate a dividend process, or test the lift");
  inputs(li, true, false);
  li->add_option("--dividends", c.dividends_path, "dividend process JSON");
  li->add_flag("--check", c.check, "run the lift property tests instead");
  sampling(li);
  tolerances(li);
  fmt(li, {"text", "json"});

  auto* pd = app.add_subcommand("paper-demo", "reproduce the pinned worked examples");
  pd->add_option("--fixtures", c.fixtures, "fixture directory");
  pd->add_flag("--update", c.update, "rewrite the pinned values");
  fmt(pd, {"text", "json"});

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  if (c.format == "text" && cu->parsed()) c.format = "csv";
  if (!cu->parsed() && c.format == "csv") c.format = "text";

  try {
    c.tol.validate();
    if (vs->parsed()) return cmd_validate_space(c, out);
    if (ev->parsed()) return cmd_evaluate(c, out);
    if (in->parsed()) return cmd_induce(c, out);
    if (cu->parsed()) return cmd_curve(c, out);
    if (re->parsed()) return cmd_reconstruct(c, out);
    if (du->parsed()) return cmd_dual(c, out);
    if (ax->parsed()) return cmd_check_axioms(c, out);
    if (co->parsed()) return cmd_check_consistency(c, out);
    if (li->parsed()) return cmd_lift(c, out);
    if (pd->parsed()) return cmd_paper_demo(c, out, err);
  } catch (const Error& e) {
    err << io::dump(error_json(e), -1) << '\n';
    return 1;
  } catch (const json::exception& e) {
    err << io::dump({{"error", "parse"}, {"message", e.what()}}, -1) << '\n';
    return 1;
  }
  return 2;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, out, err);
}

}  // namespace perflat::cli
