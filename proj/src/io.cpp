#include "dsp/io.hpp"

#include "dsp/error.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace dsp::io {

namespace {

std::string pointer_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

std::string child(const std::string& path, const std::string& key) { return path + "/" + pointer_token(key); }
std::string child(const std::string& path, std::size_t index) { return path + "/" + std::to_string(index); }

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::SchemaError, (path.empty() ? std::string("/") : path) + ": " + what);
}

void expect_object(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  std::set<std::string> names(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!names.count(it.key())) fail(child(path, it.key()), "unknown field");
  }
  if (j.contains("schema") && j.at("schema") != kSchema) fail(child(path, "schema"), "unsupported schema");
}

const Json& field(const Json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) fail(child(path, key), "missing field");
  return j.at(key);
}

const Json& array_field(const Json& j, const std::string& path, const char* key) {
  const Json& a = field(j, path, key);
  if (!a.is_array()) fail(child(path, key), "expected an array");
  return a;
}

int as_int(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

double as_double(const Json& j, const std::string& path) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

Rational as_rational(const Json& j, const std::string& path) {
  if (j.is_number_integer()) return Rational(j.get<long long>());
  if (!j.is_string()) fail(path, "expected a rational string \"p/q\"");
  try {
    return parse_rational(j.get<std::string>());
  } catch (const Error& e) {
    fail(path, e.what());
  }
}

std::vector<int> int_list(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_int(j[i], child(path, i)));
  return out;
}

Mode mode_field(const Json& j, const std::string& path) {
  const Json& m = field(j, path, "mode");
  if (m != "additive" && m != "multiplicative") fail(child(path, "mode"), "expected \"additive\" or \"multiplicative\"");
  return parse_mode(m.get<std::string>());
}

// Constructors of the core types validate their invariants; report their
// complaints as schema errors at the enclosing path.
template <class F>
auto guarded(const std::string& path, F&& make) {
  try {
    return make();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::SchemaError) throw;
    fail(path, e.what());
  }
}

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json matrix_json(const CMat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(Json::array({m(r, c).real(), m(r, c).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

CMat matrix_from_json(const Json& j, int n, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) fail(path, "expected " + std::to_string(n) + " rows");
  CMat m(n, n);
  for (int r = 0; r < n; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    const auto rp = child(path, static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<int>(row.size()) != n) fail(rp, "expected " + std::to_string(n) + " entries");
    for (int c = 0; c < n; ++c) {
      const Json& e = row[static_cast<std::size_t>(c)];
      const auto ep = child(rp, static_cast<std::size_t>(c));
      if (!e.is_array() || e.size() != 2) fail(ep, "expected a [re, im] pair");
      m(r, c) = cd(as_double(e[0], child(ep, 0)), as_double(e[1], child(ep, 1)));
    }
  }
  return m;
}

}  // namespace

JordanForm jordan_form_from_json(const Json& j, int n, const std::string& path) {
  if (j.is_object() && j.contains("mv")) {
    expect_object(j, path, {"mv", "n"});
    const auto mv = int_list(j.at("mv"), child(path, "mv"));
    auto form = guarded(path, [&] { return JordanForm::diagonal(MultiplicityVector(mv)); });
    if (j.contains("n") && as_int(j.at("n"), child(path, "n")) != form.n()) fail(child(path, "n"), "does not match the mv");
    if (n > 0 && form.n() != n) fail(child(path, "mv"), "components must add up to " + std::to_string(n));
    return form;
  }
  expect_object(j, path, {"n", "groups"});
  const int size = as_int(field(j, path, "n"), child(path, "n"));
  if (n > 0 && size != n) fail(child(path, "n"), "expected " + std::to_string(n));
  const Json& groups = array_field(j, path, "groups");
  std::vector<EigenSlot> slots;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto gp = child(child(path, "groups"), i);
    expect_object(groups[i], gp, {"label", "blocks"});
    const Json& label = field(groups[i], gp, "label");
    if (!label.is_string()) fail(child(gp, "label"), "expected a string");
    const auto blocks = int_list(field(groups[i], gp, "blocks"), child(gp, "blocks"));
    slots.push_back({label.get<std::string>(), guarded(child(gp, "blocks"), [&] { return Partition(blocks); })});
  }
  return guarded(path, [&] { return JordanForm(size, std::move(slots)); });
}

ClassTuple class_tuple_from_json(const Json& j, const std::string& path) {
  expect_object(j, path, {"schema", "mode", "n", "forms"});
  const Mode mode = mode_field(j, path);
  const int n = as_int(field(j, path, "n"), child(path, "n"));
  if (n < 1) fail(child(path, "n"), "must be positive");
  const Json& forms = array_field(j, path, "forms");
  std::vector<JordanForm> out;
  for (std::size_t i = 0; i < forms.size(); ++i) out.push_back(jordan_form_from_json(forms[i], n, child(child(path, "forms"), i)));
  return guarded(path, [&] { return ClassTuple(mode, n, std::move(out)); });
}

Spectrum spectrum_from_json(const Json& j, const std::string& path) {
  expect_object(j, path, {"schema", "mode", "forms"});
  const Mode mode = mode_field(j, path);
  const char* key = mode == Mode::multiplicative ? "angle" : "value";
  const Json& forms = array_field(j, path, "forms");
  std::vector<std::vector<SpectrumEntry>> out;
  for (std::size_t f = 0; f < forms.size(); ++f) {
    const auto fp = child(child(path, "forms"), f);
    if (!forms[f].is_array()) fail(fp, "expected an array of eigenvalues");
    out.emplace_back();
    for (std::size_t i = 0; i < forms[f].size(); ++i) {
      const auto ep = child(fp, i);
      const Json& e = forms[f][i];
      if (mode == Mode::multiplicative) {
        expect_object(e, ep, {"angle", "mult"});
      } else {
        expect_object(e, ep, {"value", "mult"});
      }
      out.back().push_back({as_rational(field(e, ep, key), child(ep, key)), as_int(field(e, ep, "mult"), child(ep, "mult"))});
    }
  }
  return guarded(path, [&] { return Spectrum(mode, std::move(out)); });
}

Witness witness_from_json(const Json& j, const std::string& path) {
  expect_object(j, path, {"schema", "mode", "n", "matrices", "residual", "frames"});
  Witness w;
  w.mode = mode_field(j, path);
  const int n = as_int(field(j, path, "n"), child(path, "n"));
  if (n < 1) fail(child(path, "n"), "must be positive");
  const Json& mats = array_field(j, path, "matrices");
  for (std::size_t i = 0; i < mats.size(); ++i) w.matrices.push_back(matrix_from_json(mats[i], n, child(child(path, "matrices"), i)));
  if (w.matrices.size() < 2) fail(child(path, "matrices"), "expected at least two matrices");
  if (j.contains("frames")) {
    const Json& frames = array_field(j, path, "frames");
    if (frames.size() != mats.size()) fail(child(path, "frames"), "expected one frame per matrix");
    for (std::size_t i = 0; i < frames.size(); ++i) w.frames.push_back(matrix_from_json(frames[i], n, child(child(path, "frames"), i)));
  }
  // the stored value is informational; the residual is always recomputed
  if (j.contains("residual")) as_double(j.at("residual"), child(path, "residual"));
  w.residual = tuple_residual(w.mode, w.matrices);
  return w;
}

Instance instance_from_json(const Json& j) {
  if (!j.is_object()) fail("", "expected an object");
  Instance inst;
  if (j.contains("tuple") || j.contains("spectrum")) {
    expect_object(j, "", {"schema", "tuple", "spectrum", "name"});
    if (j.contains("tuple")) inst.tuple = class_tuple_from_json(j.at("tuple"), "/tuple");
    if (j.contains("spectrum")) inst.spectrum = spectrum_from_json(j.at("spectrum"), "/spectrum");
  } else if (j.contains("n")) {
    inst.tuple = class_tuple_from_json(j);
  } else {
    inst.spectrum = spectrum_from_json(j);
  }
  return inst;
}

Json to_json(const JordanForm& f) {
  Json groups = Json::array();
  for (const auto& s : f.slots()) groups.push_back({{"label", s.label}, {"blocks", s.blocks.parts()}});
  return {{"n", f.n()}, {"groups", groups}};
}

Json to_json(const ClassTuple& t) {
  Json forms = Json::array();
  for (const auto& f : t.forms()) forms.push_back(to_json(f));
  return {{"mode", to_string(t.mode())}, {"n", t.n()}, {"forms", forms}};
}

Json to_json(const Spectrum& s) {
  const char* key = s.mode() == Mode::multiplicative ? "angle" : "value";
  Json forms = Json::array();
  for (const auto& form : s.forms()) {
    Json entries = Json::array();
    for (const auto& e : form) entries.push_back({{key, to_string(e.value)}, {"mult", e.mult}});
    forms.push_back(entries);
  }
  return {{"mode", to_string(s.mode())}, {"forms", forms}};
}

Json to_json(const Instance& inst) {
  Json j = Json::object();
  if (inst.tuple) j["tuple"] = to_json(*inst.tuple);
  if (inst.spectrum) j["spectrum"] = to_json(*inst.spectrum);
  return tagged(j);
}

Json to_json(const Witness& w) {
  Json mats = Json::array();
  for (const auto& m : w.matrices) mats.push_back(matrix_json(m));
  Json j = {{"mode", to_string(w.mode)}, {"n", w.n()}, {"matrices", mats}, {"residual", number(w.residual)}};
  if (!w.frames.empty()) {
    Json frames = Json::array();
    for (const auto& q : w.frames) frames.push_back(matrix_json(q));
    j["frames"] = frames;
  }
  return j;
}

Json to_json(const ConditionReport& c) {
  return {{"alpha", c.alpha}, {"beta", c.beta}, {"omega", c.omega}, {"sum_d", c.sum_d},
          {"sum_r", c.sum_r}, {"min_beta_sum", c.min_beta_sum}, {"n", c.n}};
}

Json to_json(const DecisionTrace& t) {
  Json steps = Json::array();
  for (const auto& s : t.steps) {
    steps.push_back({{"n", s.input.n()}, {"n1", s.n1}, {"chosen_slots", s.chosen_slots}, {"output", to_json(s.output)}});
  }
  Json j = {{"initial", to_json(t.initial)},
            {"conditions", to_json(t.initial_conditions)},
            {"kappa", t.kappa},
            {"steps", steps},
            {"final_n", t.final_n},
            {"verdict", to_string(t.verdict)},
            {"stopped_on_omega", t.stopped_on_omega}};
  if (t.failed_condition) j["failed_condition"] = to_string(*t.failed_condition);
  if (t.failed_at_step) j["failed_at_step"] = *t.failed_at_step;
  return j;
}

Json to_json(const StopCase& c) {
  Json j = {{"tag", to_string(c.tag)}};
  if (c.tag != StopTag::none) j["d"] = c.d_param;
  return j;
}

Json to_json(const GcdData& g) {
  return {{"q", g.q}, {"k", g.k}, {"xi_angle", to_string(g.xi_angle)}, {"l", g.l}, {"primitive", g.primitive}};
}

Json to_json(const Relation& r) { return {{"kcard", r.kcard}, {"chosen", r.chosen}}; }

Json to_json(const ChainStructure& c) {
  Json sets = Json::array();
  for (const auto& s : c.sets) {
    Json values = Json::array();
    for (const auto& v : s.values) values.push_back(to_string(v));
    sets.push_back({{"values", values}, {"multiplicity", s.multiplicity}});
  }
  return {{"m", c.m}, {"sets", sets}, {"divides_half_n", c.divides_half_n}, {"below_half_n", c.below_half_n}};
}

Json to_json(const Diagnostics& d) {
  Json residuals = Json::array();
  for (double r : d.class_residuals) residuals.push_back(number(r));
  Json j = {{"residual", number(d.residual)},
            {"burnside_dim", d.burnside_dim},
            {"centralizer_dim", d.centralizer_dim},
            {"class_residuals", residuals}};
  if (d.invariant_subspace) {
    j["invariant_subspace_dim"] = d.invariant_subspace->cols();
    j["invariant_subspace"] = matrix_json(*d.invariant_subspace);
  }
  return j;
}

Json to_json(const SearchReport& r, int n, bool include_timing) {
  Json restarts = Json::array();
  const RestartOutcome* best = nullptr;
  for (const auto& o : r.restarts) {
    Json e = {{"index", o.index},
              {"converged", o.converged},
              {"residual", number(o.residual)},
              {"objective", number(o.objective)},
              {"iterations", o.iterations},
              {"attempts", o.attempts},
              {"free_class", o.free_class}};
    if (o.diagnostics) e["diagnostics"] = to_json(*o.diagnostics);
    if (o.witness) {
      Witness bare = *o.witness;
      bare.frames.clear();
      e["witness"] = to_json(bare);
      if (!best) best = &o;
    }
    restarts.push_back(std::move(e));
  }
  Json j = {{"seed", r.seed},
            {"budget", {{"restarts", r.budget.restarts}, {"iterations", r.budget.iterations}}},
            {"tol", r.tol},
            {"n", n},
            {"restarts", restarts},
            {"best_residual", number(r.best_residual)},
            {"converged", r.converged_count()},
            {"irreducible", r.irreducible_count(n)}};
  if (best) j["first_witness"] = to_json(*best->witness);
  if (include_timing) j["wall_time_s"] = r.wall_time_s;
  return j;
}

Json to_json(const DeformResult& r) {
  Json classes = Json::array();
  for (const auto& c : r.final_classes) {
    Json values = Json::array();
    for (const auto& v : c.values) values.push_back(to_string(v));
    classes.push_back({{"jnf", to_json(c.jnf)}, {"values", values}});
  }
  Json residuals = Json::array();
  for (double x : r.step_residuals) residuals.push_back(number(x));
  return {{"witness", to_json(r.witness)},
          {"step_params", r.step_params},
          {"step_residuals", residuals},
          {"final_classes", classes},
          {"centralizer_dim", r.centralizer_dim}};
}

Json tagged(Json j) {
  j["schema"] = kSchema;
  return j;
}

std::string canonical(const Json& j) { return j.dump(2) + "\n"; }

Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::SchemaError, std::string("malformed JSON: ") + e.what());
  }
}

Json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void write_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + path);
  out << canonical(j);
}

Instance load_instance(const std::string& path) { return instance_from_json(read_file(path)); }

}  // namespace dsp::io
