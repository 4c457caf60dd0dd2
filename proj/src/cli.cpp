#include "dsp/cli.hpp"

#include "dsp/deform.hpp"
#include "dsp/error.hpp"
#include "dsp/experiment.hpp"
#include "dsp/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <sstream>

namespace dsp {

namespace {

using io::Json;

int exit_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BudgetExceeded:
    case ErrorKind::SamplingExhausted:
    case ErrorKind::ContinuationStuck:
    case ErrorKind::NoConvergence:
      return kExitBudget;
    case ErrorKind::OmegaHolds:
    case ErrorKind::BetaFails:
    case ErrorKind::SizeOne:
    case ErrorKind::KappaNonZero:
    case ErrorKind::CentralizerNontrivial:
    case ErrorKind::BlockSplitImpossible:
    case ErrorKind::InconsistentChains:
      return kExitNegative;
    default:
      return kExitUsage;
  }
}

std::uint64_t default_seed() {
  const char* env = std::getenv("DSP_SEED");
  if (!env || !*env) return 0;
  try {
    return std::stoull(env);
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidInput, "DSP_SEED must be a non-negative integer");
  }
}

std::string join(const std::vector<int>& v, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + std::to_string(v[i]);
  return out;
}

std::string form_string(const JordanForm& f) {
  if (f.is_diagonal()) return "(" + join(multiplicity_vector(f).components()) + ")";
  std::string out = "{";
  for (std::size_t k = 0; k < f.slots().size(); ++k) {
    out += (k ? " " : "") + f.slots()[k].label + ":[" + join(f.slots()[k].blocks.parts()) + "]";
  }
  return out + "}";
}

std::string tuple_string(const ClassTuple& t) {
  std::string out;
  for (std::size_t j = 0; j < t.forms().size(); ++j) out += (j ? " " : "") + form_string(t.forms()[j]);
  return out;
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::string yes(bool b) { return b ? "yes" : "no"; }

std::vector<std::vector<int>> parse_pmv(const std::string& text) {
  std::vector<std::vector<int>> out;
  std::stringstream forms(text);
  std::string form;
  while (std::getline(forms, form, ';')) {
    out.emplace_back();
    std::stringstream parts(form);
    std::string part;
    while (std::getline(parts, part, ',')) {
      try {
        out.back().push_back(std::stoi(part));
      } catch (const std::exception&) {
        throw Error(ErrorKind::InvalidInput, "bad --pmv component '" + part + "'");
      }
    }
  }
  if (out.size() < 2) throw Error(ErrorKind::InvalidInput, "--pmv needs at least two forms separated by ';'");
  return out;
}

ClassTuple tuple_of(const io::Instance& inst) {
  if (inst.tuple) return *inst.tuple;
  return inst.spectrum->diagonal_classes();
}

const Spectrum& spectrum_of(const io::Instance& inst) {
  if (!inst.spectrum) throw Error(ErrorKind::InvalidInput, "the instance has no spectrum");
  return *inst.spectrum;
}

std::vector<ConcreteClass> classes_of(const io::Instance& inst) {
  if (inst.tuple) return classes_from(*inst.tuple, spectrum_of(inst));
  return classes_from_spectrum(spectrum_of(inst));
}

std::string relation_string(const Relation& r, const Spectrum& s) {
  std::string out = "kcard " + std::to_string(r.kcard) + ":";
  for (std::size_t j = 0; j < r.chosen.size(); ++j) {
    out += " [";
    bool first = true;
    for (std::size_t i = 0; i < r.chosen[j].size(); ++i) {
      if (r.chosen[j][i] == 0) continue;
      out += (first ? "" : " ") + to_string(s.forms()[j][i].value) + "x" + std::to_string(r.chosen[j][i]);
      first = false;
    }
    out += "]";
  }
  return out;
}

struct Context {
  std::ostream& out;
  bool json = false;
  std::uint64_t seed = 0;
  int restarts = 50;
  int iterations = 400;
  double tol = 1e-10;
  int threads = 1;

  void emit(const Json& j) const { out << io::canonical(io::tagged(j)); }
  void line(const std::string& s) const { out << s << "\n"; }
};

int cmd_decide(const Context& c, const std::string& file) {
  const ClassTuple t = tuple_of(io::load_instance(file));
  const auto trace = decide_generic(t);
  std::optional<StopCase> stop;
  if (trace.kappa == 0) stop = classify_stop(t);
  const int code = trace.verdict == Verdict::solvable ? kExitOk : kExitNegative;
  if (c.json) {
    Json j = {{"trace", io::to_json(trace)}};
    if (stop) j["classification"] = io::to_json(*stop);
    c.emit(j);
    return code;
  }
  const auto& cond = trace.initial_conditions;
  c.line("n=" + std::to_string(t.n()) + "  forms=" + std::to_string(t.forms().size()) + "  mode=" + to_string(t.mode()) +
         "  kappa=" + std::to_string(trace.kappa));
  c.line("alpha " + yes(cond.alpha) + " (sum d = " + std::to_string(cond.sum_d) + ", need >= " +
         std::to_string(2 * cond.n * cond.n - 2) + ")   beta " + yes(cond.beta) + " (min " +
         std::to_string(cond.min_beta_sum) + ", need >= " + std::to_string(cond.n) + ")   omega " + yes(cond.omega) +
         " (sum r = " + std::to_string(cond.sum_r) + ", 2n = " + std::to_string(2 * cond.n) + ")");
  c.line("step  n    tuple");
  c.line("0     " + std::to_string(t.n()) + std::string(5 - std::to_string(t.n()).size(), ' ') + tuple_string(t));
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    const auto idx = std::to_string(i + 1);
    const auto n1 = std::to_string(s.n1);
    c.line(idx + std::string(6 - idx.size(), ' ') + n1 + std::string(5 - n1.size(), ' ') + tuple_string(s.output));
  }
  std::string verdict = "verdict: " + to_string(trace.verdict);
  if (trace.failed_condition) verdict += " (" + to_string(*trace.failed_condition) + " fails)";
  if (trace.verdict == Verdict::solvable) {
    verdict += trace.stopped_on_omega ? " (omega holds at n=" + std::to_string(trace.final_n) + ")" : " (reached n=1)";
  }
  c.line(verdict);
  if (stop) {
    c.line("classifier: " + to_string(stop->tag) + (stop->tag != StopTag::none ? ", d=" + std::to_string(stop->d_param) : ""));
  }
  return code;
}

int cmd_reduce(const Context& c, const std::string& file) {
  const ClassTuple t = tuple_of(io::load_instance(file));
  const PsiStep step = psi_step(t);
  if (c.json) {
    c.emit({{"n", t.n()}, {"n1", step.n1}, {"chosen_slots", step.chosen_slots}, {"output", io::to_json(step.output)},
            {"kappa", rigidity_index(step.output)}});
    return kExitOk;
  }
  c.line("n=" + std::to_string(t.n()) + " -> n1=" + std::to_string(step.n1) + "  kappa " +
         std::to_string(rigidity_index(t)) + " -> " + std::to_string(rigidity_index(step.output)));
  c.line("input:  " + tuple_string(t));
  c.line("output: " + tuple_string(step.output));
  return kExitOk;
}

int cmd_classify(const Context& c, const std::string& file) {
  const ClassTuple t = tuple_of(io::load_instance(file));
  const StopCase stop = classify_kappa0_stop(t);
  const int code = stop.tag == StopTag::none ? kExitNegative : kExitOk;
  if (c.json) {
    c.emit({{"classification", io::to_json(stop)}, {"kappa", rigidity_index(t)}});
  } else {
    c.line("case " + to_string(stop.tag) + (stop.tag != StopTag::none ? "  d=" + std::to_string(stop.d_param) : ""));
  }
  return code;
}

int cmd_genericity(const Context& c, const std::string& file, bool relative) {
  const Spectrum s = spectrum_of(io::load_instance(file));
  validate_spectrum(s);
  if (relative) {
    const auto r = is_relatively_generic(s);
    if (c.json) {
      Json j = {{"relatively_generic", r.relatively_generic}, {"gcd", io::to_json(r.gcd)}};
      if (r.offending) j["relation"] = io::to_json(*r.offending);
      c.emit(j);
    } else {
      c.line(std::string("relatively generic: ") + yes(r.relatively_generic));
      if (r.offending) c.line("relation: " + relation_string(*r.offending, s));
    }
    return r.relatively_generic ? kExitOk : kExitNegative;
  }
  const auto g = is_generic(s);
  if (c.json) {
    Json j = {{"generic", g.generic}};
    if (g.witness) j["relation"] = io::to_json(*g.witness);
    c.emit(j);
  } else {
    c.line(std::string("generic: ") + yes(g.generic));
    if (g.witness) c.line("relation: " + relation_string(*g.witness, s));
  }
  return g.generic ? kExitOk : kExitNegative;
}

int cmd_gcd(const Context& c, const std::string& file) {
  const auto inst = io::load_instance(file);
  const Spectrum& s = spectrum_of(inst);
  const GcdData g = compute_gcd_data(s);
  if (c.json) {
    Json j = {{"gcd", io::to_json(g)}};
    if (inst.tuple) j["block_count_gcd"] = block_count_gcd(inst.tuple->forms());
    c.emit(j);
    return kExitOk;
  }
  c.line("q=" + std::to_string(g.q) + "  k=" + std::to_string(g.k) + "  xi angle=" + to_string(g.xi_angle) +
         "  l=" + std::to_string(g.l) + "  " + (g.primitive ? "primitive" : "non-primitive"));
  if (inst.tuple) c.line("block count gcd d=" + std::to_string(block_count_gcd(inst.tuple->forms())));
  return kExitOk;
}

int cmd_sample(const Context& c, const std::string& pmv_text, const std::string& mode_text, const std::string& target,
               const std::string& xi, int bound) {
  std::vector<MultiplicityVector> pmv;
  for (const auto& mv : parse_pmv(pmv_text)) pmv.emplace_back(mv);
  SampleTarget t;
  if (target == "generic") {
    t.kind = SampleTarget::Kind::generic;
  } else if (target == "relative") {
    t.kind = SampleTarget::Kind::relatively_generic;
  } else {
    throw Error(ErrorKind::InvalidInput, "--target must be generic or relative");
  }
  if (!xi.empty()) t.xi_angle = parse_rational(xi);
  SampleOptions opts;
  opts.denominator_bound = bound;
  const Spectrum s = sample_spectrum(pmv, parse_mode(mode_text), t, c.seed, opts);
  if (c.json) {
    c.emit(io::to_json(io::Instance{std::nullopt, s}));
    return kExitOk;
  }
  const auto g = compute_gcd_data(s);
  for (std::size_t j = 0; j < s.forms().size(); ++j) {
    std::string row = "form " + std::to_string(j + 1) + ":";
    for (const auto& e : s.forms()[j]) row += " " + to_string(e.value) + "x" + std::to_string(e.mult);
    c.line(row);
  }
  c.line("q=" + std::to_string(g.q) + "  xi angle=" + to_string(g.xi_angle) + "  l=" + std::to_string(g.l));
  return kExitOk;
}

SearchOptions search_options(const Context& c) {
  SearchOptions o;
  o.seed = c.seed;
  o.budget.restarts = c.restarts;
  o.budget.iterations = c.iterations;
  o.tol = c.tol;
  o.threads = c.threads;
  return o;
}

int cmd_search(const Context& c, const std::string& file, const std::string& witness_out) {
  const auto classes = classes_of(io::load_instance(file));
  const int n = classes.front().n();
  const SearchReport report = search_tuple(classes, search_options(c));
  const int code = report.converged_count() > 0 ? kExitOk : kExitBudget;
  if (!witness_out.empty()) {
    for (const auto& o : report.restarts) {
      if (o.witness) {
        io::write_file(witness_out, io::tagged(io::to_json(*o.witness)));
        break;
      }
    }
  }
  if (c.json) {
    c.emit(io::to_json(report, n));
    return code;
  }
  c.line("restarts " + std::to_string(report.restarts.size()) + "  converged " + std::to_string(report.converged_count()) +
         "  irreducible " + std::to_string(report.irreducible_count(n)) + "  best residual " + sci(report.best_residual));
  for (const auto& l : residual_histogram([&] {
         std::vector<double> r;
         for (const auto& o : report.restarts) r.push_back(o.residual);
         return r;
       }())) {
    c.line(l);
  }
  c.line("restart  residual   burnside  centralizer  invariant");
  for (const auto& o : report.restarts) {
    if (!o.converged || !o.diagnostics) continue;
    const auto& d = *o.diagnostics;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%7d  %9.2e  %8d  %11d  %s", o.index, o.residual, d.burnside_dim, d.centralizer_dim,
                  d.invariant_subspace ? std::to_string(d.invariant_subspace->cols()).c_str() : "-");
    c.line(buf);
  }
  return code;
}

int cmd_deform(const Context& c, const std::string& witness_file, const std::string& instance_file,
               const std::string& target_file, int steps, const std::string& witness_out) {
  const Witness w = io::witness_from_json(io::read_file(witness_file));
  const auto classes = classes_of(io::load_instance(instance_file));
  const Spectrum target = spectrum_of(io::load_instance(target_file));
  DeformOptions opts;
  opts.steps = steps;
  opts.tol = c.tol;
  const DeformResult r = deform_tuple(w, classes, target, opts);
  if (!witness_out.empty()) io::write_file(witness_out, io::tagged(io::to_json(r.witness)));
  if (c.json) {
    c.emit(io::to_json(r));
    return kExitOk;
  }
  double worst = 0.0;
  for (double x : r.step_residuals) worst = std::max(worst, x);
  c.line("accepted steps " + std::to_string(r.step_params.size() - 1) + "  worst step residual " + sci(worst) +
         "  final residual " + sci(r.witness.residual) + "  centralizer " + std::to_string(r.centralizer_dim));
  return kExitOk;
}

int cmd_verify(const Context& c, const std::string& witness_file, const std::string& instance_file) {
  const Witness w = io::witness_from_json(io::read_file(witness_file));
  const auto classes = classes_of(io::load_instance(instance_file));
  const Diagnostics d = verify_witness(w, classes);
  bool ok = d.residual < c.tol;
  for (double r : d.class_residuals) ok = ok && r < c.tol;
  if (c.json) {
    c.emit({{"diagnostics", io::to_json(d)}, {"valid", ok}, {"irreducible", d.irreducible(w.n())}});
  } else {
    c.line("residual " + sci(d.residual) + "  burnside " + std::to_string(d.burnside_dim) + "/" +
           std::to_string(w.n() * w.n()) + "  centralizer " + std::to_string(d.centralizer_dim));
    std::string row = "class residuals:";
    for (double r : d.class_residuals) row += " " + sci(r);
    c.line(row);
    if (d.invariant_subspace) c.line("invariant subspace of dimension " + std::to_string(d.invariant_subspace->cols()));
    c.line(std::string("valid: ") + yes(ok) + "  irreducible: " + yes(d.irreducible(w.n())));
  }
  return ok ? kExitOk : kExitNegative;
}

int cmd_experiment(const Context& c, const std::string& preset, const std::string& manifest_out,
                   const std::string& replay, bool restarts_given, int d) {
  if (!replay.empty()) {
    const ReplayResult r = replay_manifest(io::read_file(replay), c.threads);
    if (c.json) {
      c.emit({{"identical", r.identical}, {"expected", r.expected_digest}, {"actual", r.actual_digest}});
    } else {
      c.line("expected sha256 " + r.expected_digest);
      c.line("actual   sha256 " + r.actual_digest);
      c.line(r.identical ? "replay identical" : "replay differs");
    }
    return r.identical ? kExitOk : kExitNegative;
  }
  if (preset.empty()) throw Error(ErrorKind::InvalidInput, "experiment needs a preset or --replay");
  ExperimentOptions opts;
  opts.seed = c.seed;
  if (restarts_given) opts.restarts = c.restarts;
  opts.iterations = c.iterations;
  opts.tol = c.tol;
  opts.threads = c.threads;
  if (d > 0) opts.d = d;
  const ExperimentOutcome outcome = run_experiment(preset, opts);
  if (!manifest_out.empty()) io::write_file(manifest_out, make_manifest(preset, opts, outcome));
  if (c.json) {
    c.out << io::canonical(outcome.report);
  } else {
    for (const auto& l : outcome.summary) c.line(l);
  }
  return outcome.exit_code;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deligne-Simpson problem toolkit", "dsp"};
  app.require_subcommand(1);
  app.fallthrough();

  Context ctx{out};
  std::string seed_text;
  app.add_flag("--json", ctx.json, "Print JSON instead of tables");
  app.add_option("--seed", seed_text, "Random seed (default: $DSP_SEED or 0)");
  auto* restarts_opt = app.add_option("--restarts", ctx.restarts, "Search restarts")->check(CLI::PositiveNumber);
  app.add_option("--iterations", ctx.iterations, "Iterations per restart")->check(CLI::PositiveNumber);
  app.add_option("--tol", ctx.tol, "Residual tolerance")->check(CLI::PositiveNumber);
  app.add_option("--threads", ctx.threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string file, file2, target_file, out_file, pmv, mode = "multiplicative", target = "generic", xi, preset,
                                                     manifest, replay;
  bool relative = false;
  int bound = 1000, steps = 20, dparam = 0;

  auto* decide = app.add_subcommand("decide", "Decide solvability for generic eigenvalues");
  decide->add_option("instance", file, "Tuple or instance JSON")->required();
  auto* reduce = app.add_subcommand("reduce", "Apply one reduction step");
  reduce->add_option("instance", file)->required();
  auto* classify = app.add_subcommand("classify", "Classify the terminal tuple of a kappa = 0 reduction");
  classify->add_option("instance", file)->required();
  auto* genericity = app.add_subcommand("genericity", "Check a spectrum for non-genericity relations");
  genericity->add_option("instance", file)->required();
  genericity->add_flag("--relative", relative, "Allow the basic relation and its corollaries");
  auto* gcd = app.add_subcommand("gcd-data", "Print q, k, xi and l of a spectrum");
  gcd->add_option("instance", file)->required();
  auto* sample = app.add_subcommand("sample", "Sample a spectrum for multiplicity vectors");
  sample->add_option("--pmv", pmv, "Multiplicity vectors, e.g. 2,2;2,2;2,2;2,2")->required();
  sample->add_option("--mode", mode)->check(CLI::IsMember({"additive", "multiplicative"}));
  sample->add_option("--target", target, "generic or relative")->check(CLI::IsMember({"generic", "relative"}));
  sample->add_option("--xi", xi, "Angle of xi as p/q");
  sample->add_option("--bound", bound, "Denominator bound")->check(CLI::Range(8, 1000000));
  auto* search = app.add_subcommand("search", "Search for a matrix tuple in the given classes");
  search->add_option("instance", file)->required();
  search->add_option("--out", out_file, "Write the first converged witness here");
  auto* deform = app.add_subcommand("deform", "Continue a witness to another spectrum");
  deform->add_option("witness", file)->required();
  deform->add_option("instance", file2)->required();
  deform->add_option("--target", target_file, "Target spectrum JSON")->required();
  deform->add_option("--steps", steps)->check(CLI::PositiveNumber);
  deform->add_option("--out", out_file, "Write the deformed witness here");
  auto* verify = app.add_subcommand("verify", "Check a witness against its classes");
  verify->add_option("witness", file)->required();
  verify->add_option("instance", file2)->required();
  auto* experiment = app.add_subcommand("experiment", "Run a built-in experiment");
  experiment->add_option("preset", preset)->check(CLI::IsMember(experiment_presets()));
  experiment->add_option("--manifest", manifest, "Write a manifest with output digests");
  experiment->add_option("--replay", replay, "Re-run a manifest and compare digests");
  experiment->add_option("--d", dparam, "Block parameter of the case presets")->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    err << "run 'dsp --help' for the list of commands\n";
    return kExitUsage;
  }

  try {
    if (!seed_text.empty()) {
      try {
        std::size_t used = 0;
        ctx.seed = std::stoull(seed_text, &used);
        if (used != seed_text.size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        err << "usage error: --seed must be a non-negative integer\n";
        return kExitUsage;
      }
    } else {
      ctx.seed = default_seed();
    }
    if (decide->parsed()) return cmd_decide(ctx, file);
    if (reduce->parsed()) return cmd_reduce(ctx, file);
    if (classify->parsed()) return cmd_classify(ctx, file);
    if (genericity->parsed()) return cmd_genericity(ctx, file, relative);
    if (gcd->parsed()) return cmd_gcd(ctx, file);
    if (sample->parsed()) return cmd_sample(ctx, pmv, mode, target, xi, bound);
    if (search->parsed()) return cmd_search(ctx, file, out_file);
    if (deform->parsed()) return cmd_deform(ctx, file, file2, target_file, steps, out_file);
    if (verify->parsed()) return cmd_verify(ctx, file, file2);
    if (experiment->parsed()) return cmd_experiment(ctx, preset, manifest, replay, restarts_opt->count() > 0, dparam);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace dsp
