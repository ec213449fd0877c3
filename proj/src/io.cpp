#include "perflat/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace perflat::io {

namespace {

using nlohmann::json;

long line_of(const std::string& text, std::size_t byte) {
  long line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

const json& require(const json& j, const char* key, const std::string& field) {
  if (!j.is_object()) throw ParseError(field, field + " must be an object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(field + "." + key, std::string("missing field '") + key + "'");
  return *it;
}

double read_num(const json& j, const std::string& field) {
  if (!j.is_number()) throw ParseError(field, field + " must be a number");
  return j.get<double>();
}

std::size_t read_stage(const std::string& key, const FilteredSpace& sp, const std::string& field) {
  std::size_t pos = 0;
  unsigned long t = 0;
  try {
    t = std::stoul(key, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != key.size()) throw ParseError(field, "stage key '" + key + "' is not an integer");
  if (t > sp.horizon()) throw ParseError(field, "stage " + key + " beyond the horizon");
  return t;
}

std::size_t leaf_index(const FilteredSpace& sp, const std::string& id, const std::string& field) {
  auto leaf = sp.find_leaf(id);
  if (!leaf) throw ParseError(field, "unknown leaf id '" + id + "'");
  return *leaf;
}

/// Per-leaf numbers given as {leafId: value}; every leaf must be present.
std::vector<double> leaf_map(const json& j, const FilteredSpace& sp, const std::string& field,
                             bool allow_inf) {
  if (!j.is_object()) throw ParseError(field, field + " must map leaf ids to numbers");
  std::vector<double> v(sp.leaf_count(), 0.0);
  std::vector<bool> seen(v.size(), false);
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::size_t leaf = leaf_index(sp, it.key(), field + "." + it.key());
    double x = read_ext(it.value(), field + "." + it.key());
    if (!allow_inf && !std::isfinite(x)) throw ParseError(field + "." + it.key(), "value must be finite");
    v[leaf] = x;
    seen[leaf] = true;
  }
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!seen[i]) throw ParseError(field, "no value for leaf '" + sp.leaf_ids()[i] + "'");
  return v;
}

void check_space_ref(const json& j, const SpacePtr& space, const std::string& field) {
  auto it = j.find("space");
  if (it == j.end()) return;
  if (!it->is_string()) throw ParseError(field + ".space", "space reference must be a string");
  if (it->get<std::string>() != space->name())
    throw ParseError(field + ".space", "refers to space '" + it->get<std::string>() +
                                           "' but the loaded space is '" + space->name() + "'");
}

void write_number(std::ostringstream& os, double v) {
  if (std::isinf(v)) {
    os << (v > 0 ? "\"inf\"" : "\"-inf\"");
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

void write(std::ostringstream& os, const json& j, int indent, int depth) {
  auto newline = [&](int d) {
    if (indent < 0) return;
    os << '\n' << std::string(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ',';
        first = false;
        newline(depth + 1);
        os << json(it.key()).dump() << (indent < 0 ? ":" : ": ");
        write(os, it.value(), indent, depth + 1);
      }
      newline(depth);
      os << '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ',';
        newline(depth + 1);
        write(os, j[i], indent, depth + 1);
      }
      newline(depth);
      os << ']';
      return;
    }
    case json::value_t::number_float:
      write_number(os, j.get<double>());
      return;
    default:
      os << j.dump();
  }
}

}  // namespace

json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("<document>", std::string("malformed JSON: ") + e.what(), line_of(text, e.byte));
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("<file>", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_json_text(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(e.field(), path.string() + ": " + e.what(), e.line());
  }
}

std::string dump(const json& j, int indent) {
  std::ostringstream os;
  write(os, j, indent, 0);
  return os.str();
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path.string());
  out << dump(j) << '\n';
}

double read_ext(const json& j, const std::string& field) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  throw ParseError(field, field + " must be a number, \"inf\" or \"-inf\"");
}

// ---- space --------------------------------------------------------------------

SpacePtr parse_space(const json& j, const std::string& default_name) {
  if (!j.is_object()) throw ParseError("<document>", "space must be a JSON object");
  std::string name = default_name;
  if (auto it = j.find("name"); it != j.end()) {
    if (!it->is_string()) throw ParseError("name", "name must be a string");
    name = it->get<std::string>();
  }

  const json& leaves = require(j, "leaves", "space");
  if (!leaves.is_array() || leaves.empty()) throw ParseError("leaves", "leaves must be a nonempty array");
  std::vector<std::string> ids;
  std::vector<double> probs;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    std::string f = "leaves[" + std::to_string(i) + "]";
    const json& id = require(leaves[i], "id", f);
    if (!id.is_string()) throw ParseError(f + ".id", "leaf id must be a string");
    ids.push_back(id.get<std::string>());
    probs.push_back(read_num(require(leaves[i], "p", f), f + ".p"));
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);

  const json& times = require(j, "times", "space");
  if (!times.is_array() || times.empty()) throw ParseError("times", "times must be a nonempty array");
  for (std::size_t k = 0; k < times.size(); ++k)
    if (!times[k].is_number_integer() || times[k].get<long>() != static_cast<long>(k))
      throw ParseError("times[" + std::to_string(k) + "]", "times must be 0, 1, ..., T");
  const std::size_t stages = times.size();

  // stage 0 and stage T may be left out; they default to the root and the singletons
  std::vector<FilteredSpace::Partition> parts(stages);
  std::vector<bool> given(stages, false);
  const json& atoms = require(j, "atoms", "space");
  if (!atoms.is_object()) throw ParseError("atoms", "atoms must be an object keyed by stage");
  for (auto it = atoms.begin(); it != atoms.end(); ++it) {
    std::string f = "atoms." + it.key();
    std::size_t pos = 0;
    unsigned long t = 0;
    try {
      t = std::stoul(it.key(), &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != it.key().size() || t >= stages)
      throw ParseError(f, "atoms key '" + it.key() + "' is not a listed time");
    if (!it->is_array()) throw ParseError(f, "atoms of a stage must be an array of arrays");
    for (std::size_t a = 0; a < it->size(); ++a) {
      const json& atom = (*it)[a];
      std::string fa = f + "[" + std::to_string(a) + "]";
      if (!atom.is_array()) throw ParseError(fa, "an atom must be an array of leaf ids");
      std::vector<std::size_t> members;
      for (const json& id : atom) {
        if (!id.is_string()) throw ParseError(fa, "leaf ids must be strings");
        auto found = index.find(id.get<std::string>());
        if (found == index.end()) throw ParseError(fa, "unknown leaf id '" + id.get<std::string>() + "'");
        members.push_back(found->second);
      }
      parts[t].push_back(std::move(members));
    }
    given[t] = true;
  }
  for (std::size_t t = 0; t < stages; ++t) {
    if (given[t]) continue;
    if (t == 0) {
      std::vector<std::size_t> all(ids.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      parts[0].push_back(std::move(all));
    } else if (t == stages - 1) {
      for (std::size_t i = 0; i < ids.size(); ++i) parts[t].push_back({i});
    } else {
      throw ParseError("atoms." + std::to_string(t), "missing atoms for stage " + std::to_string(t));
    }
  }
  return FilteredSpace::create(std::move(ids), std::move(probs), std::move(parts), name);
}

json space_to_json(const FilteredSpace& sp) {
  json j;
  j["name"] = sp.name();
  j["times"] = json::array();
  for (std::size_t t = 0; t < sp.stage_count(); ++t) j["times"].push_back(t);
  j["leaves"] = json::array();
  for (std::size_t i = 0; i < sp.leaf_count(); ++i)
    j["leaves"].push_back({{"id", sp.leaf_ids()[i]}, {"p", sp.probability(i)}});
  json atoms = json::object();
  for (std::size_t t = 0; t < sp.stage_count(); ++t) {
    json stage = json::array();
    for (std::size_t a = 0; a < sp.atom_count(t); ++a) {
      json ids = json::array();
      for (std::size_t leaf : sp.atom_leaves(t, a)) ids.push_back(sp.leaf_ids()[leaf]);
      stage.push_back(std::move(ids));
    }
    atoms[std::to_string(t)] = std::move(stage);
  }
  j["atoms"] = std::move(atoms);
  return j;
}

// ---- variables ----------------------------------------------------------------

XVar parse_xvar(const json& j, const SpacePtr& space) {
  if (!j.is_object()) throw ParseError("<document>", "variable must be a JSON object");
  check_space_ref(j, space, "variable");
  std::vector<double> v = leaf_map(require(j, "values", "variable"), *space, "values", true);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] == -kInf)
      throw ParseError("values." + space->leaf_ids()[i], "-inf is not allowed in a terminal variable");
  return XVar(space, std::move(v));
}

json xvar_to_json(const XVar& x) {
  json values = json::object();
  for (std::size_t i = 0; i < x.size(); ++i) values[x.space().leaf_ids()[i]] = num_json(x[i]);
  return {{"space", x.space().name()}, {"values", std::move(values)}};
}

json tvar_to_json(const TVar& v) {
  json values = json::object();
  for (std::size_t a = 0; a < v.size(); ++a)
    values[FilteredSpace::atom_id(v.stage(), a)] = num_json(v[a]);
  return {{"space", v.space().name()}, {"stage", v.stage()}, {"values", std::move(values)}};
}

// ---- utilities and measures ---------------------------------------------------

Utility parse_utility(const json& j, const std::string& field) {
  const json& kind = require(j, "kind", field);
  if (!kind.is_string()) throw ParseError(field + ".kind", "utility kind must be a string");
  const std::string k = kind.get<std::string>();
  if (k == "linear") return Utility::linear();
  if (k == "exp") return Utility::exponential(read_num(require(j, "lambda", field), field + ".lambda"));
  if (k == "power") return Utility::power(read_num(require(j, "eta", field), field + ".eta"));
  if (k == "piecewise_linear") {
    const json& knots = require(j, "knots", field);
    if (!knots.is_array()) throw ParseError(field + ".knots", "knots must be an array of [x, y]");
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < knots.size(); ++i) {
      std::string f = field + ".knots[" + std::to_string(i) + "]";
      if (!knots[i].is_array() || knots[i].size() != 2) throw ParseError(f, "knot must be [x, y]");
      pts.emplace_back(read_num(knots[i][0], f), read_num(knots[i][1], f));
    }
    Utility u = Utility::piecewise_linear(std::move(pts));
    u.validate();
    return u;
  }
  throw ParseError(field + ".kind", "unknown utility kind '" + k + "'");
}

json utility_to_json(const Utility& u) {
  switch (u.kind()) {
    case Utility::Kind::Linear: return {{"kind", "linear"}};
    case Utility::Kind::Exponential: return {{"kind", "exp"}, {"lambda", u.parameter()}};
    case Utility::Kind::Power: return {{"kind", "power"}, {"eta", u.parameter()}};
    case Utility::Kind::PiecewiseLinear: {
      json knots = json::array();
      for (auto [x, y] : u.knots()) knots.push_back({x, y});
      return {{"kind", "piecewise_linear"}, {"knots", std::move(knots)}};
    }
  }
  return {};
}

namespace {

RiskAversion parse_lambda(const json& j, const FilteredSpace& sp) {
  if (j.is_number()) return RiskAversion::fixed(j.get<double>());
  std::vector<std::vector<double>> per(sp.stage_count());
  if (j.is_array()) {
    if (j.size() != sp.stage_count())
      throw ParseError("params.lambda", "need one array of atom values per stage");
    for (std::size_t t = 0; t < j.size(); ++t) {
      std::string f = "params.lambda[" + std::to_string(t) + "]";
      if (!j[t].is_array()) throw ParseError(f, "stage entry must be an array");
      for (const json& v : j[t]) per[t].push_back(read_num(v, f));
    }
  } else if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      std::string f = "params.lambda." + it.key();
      std::size_t t = read_stage(it.key(), sp, f);
      if (!it->is_object()) throw ParseError(f, "stage entry must map atom ids to numbers");
      per[t].assign(sp.atom_count(t), std::nan(""));
      for (auto a = it->begin(); a != it->end(); ++a) {
        auto atom = sp.resolve_atom(t, a.key());
        if (!atom) throw ParseError(f + "." + a.key(), "unknown atom id '" + a.key() + "'");
        per[t][*atom] = read_num(a.value(), f + "." + a.key());
      }
      for (double v : per[t])
        if (std::isnan(v)) throw ParseError(f, "missing atoms in stage " + it.key());
    }
  } else {
    throw ParseError("params.lambda", "lambda must be a number, an array per stage or an object");
  }
  RiskAversion ra = RiskAversion::process(std::move(per));
  ra.validate(sp);
  return ra;
}

json lambda_json(const RiskAversion& ra) {
  if (ra.constant) return *ra.constant;
  return ra.per_stage;
}

}  // namespace

MeasureSpec parse_measure(const json& j, const FilteredSpace& sp) {
  if (!j.is_object()) throw ParseError("<document>", "measure must be a JSON object");
  const json& kind = require(j, "kind", "measure");
  if (!kind.is_string()) throw ParseError("kind", "kind must be a string");
  const std::string k = kind.get<std::string>();
  static const json empty = json::object();
  const json& params = j.contains("params") ? j["params"] : empty;
  if (!params.is_object()) throw ParseError("params", "params must be an object");

  MeasureSpec spec;
  if (k == "glr") {
    spec = MeasureSpec::glr();
  } else if (k == "exp_utility") {
    spec = params.contains("lambda") ? MeasureSpec::exp_utility(parse_lambda(params["lambda"], sp))
                                     : MeasureSpec::exp_utility(1.0);
  } else if (k == "expected_utility") {
    spec = MeasureSpec::expected_utility(parse_utility(require(params, "utility", "params"), "params.utility"));
    if (params.contains("endowment"))
      spec.endowment = leaf_map(params["endowment"], sp, "params.endowment", false);
  } else if (k == "certainty_equivalent") {
    spec = MeasureSpec::certainty_equivalent(
        parse_utility(require(params, "utility", "params"), "params.utility"));
  } else if (k == "cond_expectation") {
    spec = MeasureSpec::cond_expectation();
    if (params.contains("q")) spec.q = leaf_map(params["q"], sp, "params.q", false);
  } else if (k == "reward_risk") {
    spec = MeasureSpec::lpm_ratio();
    if (params.contains("utility")) spec.utility = parse_utility(params["utility"], "params.utility");
    if (params.contains("denominator")) {
      const json& d = params["denominator"];
      const json& dk = require(d, "kind", "params.denominator");
      if (dk == "lpm") {
        spec.denominator.kind = Denominator::Kind::LPM;
        if (d.contains("p")) spec.denominator.p = read_num(d["p"], "params.denominator.p");
      } else if (dk == "avar") {
        spec.denominator.kind = Denominator::Kind::AVaR;
        if (d.contains("level")) spec.denominator.level = read_num(d["level"], "params.denominator.level");
      } else {
        throw ParseError("params.denominator.kind", "denominator kind must be \"lpm\" or \"avar\"");
      }
    }
    if (params.contains("infinite_on_nonpositive_risk")) {
      const json& f = params["infinite_on_nonpositive_risk"];
      if (!f.is_boolean()) throw ParseError("params.infinite_on_nonpositive_risk", "must be a boolean");
      spec.denominator.infinite_on_nonpositive_risk = f.get<bool>();
    }
  } else {
    throw ParseError("kind", "unknown measure kind '" + k + "'");
  }
  if (j.contains("z_d")) spec.z_d = read_ext(j["z_d"], "z_d");
  if (j.contains("z_u")) spec.z_u = read_ext(j["z_u"], "z_u");
  return spec;
}

json measure_to_json(const MeasureSpec& spec, const FilteredSpace& sp) {
  json params = json::object();
  auto leaf_json = [&](const std::vector<double>& v) {
    json m = json::object();
    for (std::size_t i = 0; i < v.size(); ++i) m[sp.leaf_ids()[i]] = v[i];
    return m;
  };
  switch (spec.kind) {
    case MeasureSpec::Kind::GainLoss: break;
    case MeasureSpec::Kind::ExponentialUtility: params["lambda"] = lambda_json(spec.lambda); break;
    case MeasureSpec::Kind::ExpectedUtility:
      params["utility"] = utility_to_json(spec.utility);
      if (!spec.endowment.empty()) params["endowment"] = leaf_json(spec.endowment);
      break;
    case MeasureSpec::Kind::CertaintyEquivalent: params["utility"] = utility_to_json(spec.utility); break;
    case MeasureSpec::Kind::CondExpectation:
      if (!spec.q.empty()) params["q"] = leaf_json(spec.q);
      break;
    case MeasureSpec::Kind::RewardRisk:
      params["utility"] = utility_to_json(spec.utility);
      if (spec.denominator.kind == Denominator::Kind::LPM)
        params["denominator"] = {{"kind", "lpm"}, {"p", spec.denominator.p}};
      else
        params["denominator"] = {{"kind", "avar"}, {"level", spec.denominator.level}};
      params["infinite_on_nonpositive_risk"] = spec.denominator.infinite_on_nonpositive_risk;
      break;
  }
  json j{{"kind", spec.kind_name()}, {"params", std::move(params)}};
  if (spec.z_d) j["z_d"] = num_json(*spec.z_d);
  if (spec.z_u) j["z_u"] = num_json(*spec.z_u);
  return j;
}

// ---- dividends ----------------------------------------------------------------

DividendProcess parse_dividends(const json& j, const SpacePtr& space) {
  if (!j.is_object()) throw ParseError("<document>", "dividend process must be a JSON object");
  check_space_ref(j, space, "process");
  const json& pay = require(j, "payments", "process");
  if (!pay.is_object()) throw ParseError("payments", "payments must be an object keyed by stage");
  std::map<std::size_t, TVar> out;
  for (auto it = pay.begin(); it != pay.end(); ++it) {
    std::string f = "payments." + it.key();
    std::size_t t = read_stage(it.key(), *space, f);
    if (!it->is_object()) throw ParseError(f, "payment must map atom or leaf ids to numbers");
    std::vector<double> v(space->atom_count(t), 0.0);
    std::set<std::size_t> seen;
    for (auto a = it->begin(); a != it->end(); ++a) {
      auto atom = space->resolve_atom(t, a.key());
      if (!atom) throw ParseError(f + "." + a.key(), "unknown atom or leaf id '" + a.key() + "'");
      double x = read_ext(a.value(), f + "." + a.key());
      if (seen.count(*atom) && v[*atom] != x)
        throw ParseError(f + "." + a.key(), "conflicting values for atom " + FilteredSpace::atom_id(t, *atom));
      seen.insert(*atom);
      v[*atom] = x;
    }
    if (seen.size() != v.size()) throw ParseError(f, "payment missing atoms of stage " + it.key());
    out.emplace(t, TVar(space, t, std::move(v)));
  }
  return DividendProcess(space, std::move(out));
}

json dividends_to_json(const DividendProcess& d) {
  json pay = json::object();
  for (const auto& [r, v] : d.payments()) {
    json m = json::object();
    for (std::size_t a = 0; a < v.size(); ++a) m[FilteredSpace::atom_id(r, a)] = num_json(v[a]);
    pay[std::to_string(r)] = std::move(m);
  }
  return {{"space", d.space_ptr()->name()}, {"payments", std::move(pay)}};
}

}  // namespace perflat::io
