#include "dsp/experiment.hpp"

#include "dsp/error.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace dsp {

namespace {

using io::Json;

std::vector<MultiplicityVector> mvs_of(const std::vector<std::vector<int>>& pmv) {
  std::vector<MultiplicityVector> out;
  for (const auto& mv : pmv) out.emplace_back(mv);
  return out;
}

SearchOptions search_options(const ExperimentOptions& options, int default_restarts) {
  SearchOptions s;
  s.seed = options.seed;
  s.budget.restarts = options.restarts.value_or(default_restarts);
  s.budget.iterations = options.iterations;
  s.tol = options.tol;
  s.threads = options.threads;
  return s;
}

std::vector<double> residuals_of(const SearchReport& r) {
  std::vector<double> out;
  for (const auto& o : r.restarts) out.push_back(o.residual);
  return out;
}

std::string fmt(const char* pattern, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, x);
  return buf;
}

ExperimentOutcome case_experiment(StopTag tag, int d, const ExperimentOptions& options, int default_restarts) {
  const auto pmv = stop_pattern(tag, d);
  const ClassTuple tuple = diagonal_tuple(Mode::multiplicative, pmv);
  const int n = tuple.n();
  const StopCase stop = classify_stop(tuple);

  SampleTarget target{SampleTarget::Kind::relatively_generic, Rational(0)};
  const Spectrum spectrum = sample_spectrum(mvs_of(pmv), Mode::multiplicative, target, options.seed);
  const auto rel = is_relatively_generic(spectrum);
  const auto classes = classes_from_spectrum(spectrum);

  const SearchOptions sopts = search_options(options, default_restarts);
  const SearchReport report = search_tuple(classes, sopts);

  int reducible = 0;
  int with_subspace = 0;
  int nontrivial_centralizer = 0;
  for (const auto& o : report.restarts) {
    if (!o.converged || !o.diagnostics) continue;
    if (!o.diagnostics->irreducible(n)) ++reducible;
    if (o.diagnostics->invariant_subspace) ++with_subspace;
    if (o.diagnostics->centralizer_dim >= 2) ++nontrivial_centralizer;
  }
  const int irreducible = report.irreducible_count(n);

  ExperimentOutcome out;
  Json block;
  const int block_size = n / rel.gcd.l;
  block["block_size"] = block_size;
  try {
    SearchOptions bopts = sopts;
    bopts.budget.restarts = 20;
    const Witness w = build_block_diagonal_witness(classes, block_size, bopts);
    block["witness"] = io::to_json(w);
    block["diagnostics"] = io::to_json(verify_witness(w, classes, sopts.rank_tol));
    block["ok"] = w.residual < options.tol;
  } catch (const Error& e) {
    block["ok"] = false;
    block["error"] = e.what();
  }

  out.report = io::tagged({{"preset", std::string("theorem-case") + to_string(tag)},
                           {"d", d},
                           {"n", n},
                           {"tuple", io::to_json(tuple)},
                           {"classification", io::to_json(stop)},
                           {"spectrum", io::to_json(spectrum)},
                           {"gcd", io::to_json(rel.gcd)},
                           {"relatively_generic", rel.relatively_generic},
                           {"search", io::to_json(report, n)},
                           {"evidence",
                            {{"converged", report.converged_count()},
                             {"irreducible", irreducible},
                             {"reducible", reducible},
                             {"nontrivial_centralizer", nontrivial_centralizer},
                             {"invariant_subspace_found", with_subspace}}},
                           {"block_diagonal", block}});

  out.summary.push_back("case " + to_string(tag) + " n=" + std::to_string(n) + " d=" + std::to_string(d) +
                        "  classifier=" + to_string(stop.tag) + "  q=" + std::to_string(rel.gcd.q) +
                        " xi=" + to_string(rel.gcd.xi_angle) + " l=" + std::to_string(rel.gcd.l));
  out.summary.push_back("restarts " + std::to_string(report.restarts.size()) + ", converged " +
                        std::to_string(report.converged_count()) + ", irreducible " + std::to_string(irreducible) +
                        ", nontrivial centralizer " + std::to_string(nontrivial_centralizer));
  out.summary.push_back("block-diagonal witness (" + std::to_string(block_size) + "x" + std::to_string(block_size) +
                        " blocks): " + (block["ok"].get<bool>() ? "built" : "failed"));
  for (auto& line : residual_histogram(residuals_of(report))) out.summary.push_back(line);

  if (irreducible > 0) {
    out.exit_code = 2;
  } else if (!block["ok"].get<bool>()) {
    out.exit_code = 3;
  }
  return out;
}

ExperimentOutcome positive_control(const ExperimentOptions& options) {
  const std::vector<std::vector<int>> pmv(4, std::vector<int>{1, 1});
  const ClassTuple tuple = diagonal_tuple(Mode::multiplicative, pmv);
  const Spectrum spectrum =
      sample_spectrum(mvs_of(pmv), Mode::multiplicative, SampleTarget{SampleTarget::Kind::generic, {}}, options.seed);
  const auto classes = classes_from_spectrum(spectrum);
  const SearchReport report = search_tuple(classes, search_options(options, 50));
  const auto trace = decide_generic(tuple);

  int good = 0;
  for (const auto& o : report.restarts) {
    if (o.converged && o.diagnostics && o.diagnostics->irreducible(2) && o.diagnostics->centralizer_dim == 1) ++good;
  }
  ExperimentOutcome out;
  out.report = io::tagged({{"preset", "positive-control"},
                           {"n", 2},
                           {"tuple", io::to_json(tuple)},
                           {"kappa", trace.kappa},
                           {"verdict", to_string(trace.verdict)},
                           {"spectrum", io::to_json(spectrum)},
                           {"generic", is_generic(spectrum).generic},
                           {"search", io::to_json(report, 2)},
                           {"irreducible_trivial_centralizer", good}});
  out.summary.push_back("n=2, four classes (1,1): verdict " + to_string(trace.verdict) + ", kappa " +
                        std::to_string(trace.kappa));
  out.summary.push_back("restarts " + std::to_string(report.restarts.size()) + ", converged " +
                        std::to_string(report.converged_count()) + ", irreducible with trivial centralizer " +
                        std::to_string(good) + ", best residual " + fmt("%.3g", report.best_residual));
  for (auto& line : residual_histogram(residuals_of(report))) out.summary.push_back(line);
  out.exit_code = good > 0 ? 0 : 3;
  return out;
}

ExperimentOutcome two_different_q(const ExperimentOptions& options) {
  auto single = [](int block, int count) {
    return JordanForm(block * count, {EigenSlot{"a", Partition(std::vector<int>(static_cast<std::size_t>(count), block))}});
  };
  const ClassTuple tuple(Mode::multiplicative, 12, {single(2, 6), single(3, 4), single(6, 2)});
  const Spectrum original(Mode::multiplicative,
                          {{{Rational(1, 4), 12}}, {{Rational(0), 12}}, {{Rational(0), 12}}});
  const auto original_rel = is_relatively_generic(original);

  const ClassTuple diagonal = corresponding_diagonal_tuple(tuple);
  std::vector<MultiplicityVector> pmv;
  for (const auto& f : diagonal.forms()) pmv.push_back(multiplicity_vector(f));
  const Spectrum deformed = sample_spectrum(pmv, Mode::multiplicative,
                                            SampleTarget{SampleTarget::Kind::generic, Rational(1, 2)}, options.seed);
  const auto deformed_rel = is_relatively_generic(deformed);
  const StopCase stop = classify_stop(tuple);

  Json pmv_json = Json::array();
  for (const auto& mv : pmv) pmv_json.push_back(mv.components());

  ExperimentOutcome out;
  out.report = io::tagged({{"preset", "twodifferentq"},
                           {"tuple", io::to_json(tuple)},
                           {"spectrum", io::to_json(original)},
                           {"gcd", io::to_json(original_rel.gcd)},
                           {"relatively_generic", original_rel.relatively_generic},
                           {"block_count_gcd", block_count_gcd(tuple.forms())},
                           {"kappa", rigidity_index(tuple)},
                           {"classification", io::to_json(stop)},
                           {"corresponding_pmv", pmv_json},
                           {"deformed_spectrum", io::to_json(deformed)},
                           {"deformed_gcd", io::to_json(deformed_rel.gcd)},
                           {"deformed_relatively_generic", deformed_rel.relatively_generic}});
  const auto& g = original_rel.gcd;
  const auto& h = deformed_rel.gcd;
  out.summary.push_back("original classes: q=" + std::to_string(g.q) + " xi=" + to_string(g.xi_angle) + " l=" +
                        std::to_string(g.l) + (g.primitive ? " primitive" : " non-primitive") +
                        (original_rel.relatively_generic ? ", relatively generic" : ", not relatively generic"));
  out.summary.push_back("corresponding diagonal PMV, deformed: q=" + std::to_string(h.q) + " xi=" +
                        to_string(h.xi_angle) + " l=" + std::to_string(h.l) +
                        (h.primitive ? " primitive" : " non-primitive"));
  out.summary.push_back("block count gcd " + std::to_string(block_count_gcd(tuple.forms())) + ", classifier " +
                        to_string(stop.tag));
  return out;
}

}  // namespace

std::vector<std::string> experiment_presets() {
  return {"theorem-caseA", "theorem-caseB", "theorem-caseC", "theorem-caseD", "positive-control", "twodifferentq"};
}

ExperimentOutcome run_experiment(const std::string& preset, const ExperimentOptions& options) {
  if (preset == "theorem-caseA") return case_experiment(StopTag::A, options.d.value_or(2), options, 200);
  if (preset == "theorem-caseB") return case_experiment(StopTag::B, options.d.value_or(2), options, 100);
  if (preset == "theorem-caseC") return case_experiment(StopTag::C, options.d.value_or(2), options, 100);
  if (preset == "theorem-caseD") return case_experiment(StopTag::D, options.d.value_or(2), options, 100);
  if (preset == "positive-control") return positive_control(options);
  if (preset == "twodifferentq") return two_different_q(options);
  throw Error(ErrorKind::InvalidInput, "unknown experiment preset " + preset);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

io::Json make_manifest(const std::string& preset, const ExperimentOptions& options, const ExperimentOutcome& outcome) {
  const std::string bytes = io::canonical(outcome.report);
  Json j = {{"command", "experiment"},
            {"preset", preset},
            {"seed", options.seed},
            {"budget", {{"iterations", options.iterations}}},
            {"tol", options.tol},
            {"tool_version", kToolVersion},
            {"outputs", {{"report", {{"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}}}}}};
  if (options.restarts) j["budget"]["restarts"] = *options.restarts;
  if (options.d) j["d"] = *options.d;
  return io::tagged(j);
}

ReplayResult replay_manifest(const io::Json& manifest, int threads) {
  auto get = [&](const char* key) -> const Json& {
    if (!manifest.contains(key)) throw Error(ErrorKind::SchemaError, std::string("/") + key + ": missing field");
    return manifest.at(key);
  };
  if (get("schema") != io::kSchema || get("command") != "experiment") {
    throw Error(ErrorKind::SchemaError, "/command: not an experiment manifest");
  }
  ExperimentOptions options;
  options.seed = get("seed").get<std::uint64_t>();
  options.tol = get("tol").get<double>();
  options.threads = threads;
  const Json& budget = get("budget");
  options.iterations = budget.at("iterations").get<int>();
  if (budget.contains("restarts")) options.restarts = budget.at("restarts").get<int>();
  if (manifest.contains("d")) options.d = manifest.at("d").get<int>();

  ReplayResult r;
  r.expected_digest = get("outputs").at("report").at("sha256").get<std::string>();
  r.outcome = run_experiment(get("preset").get<std::string>(), options);
  r.actual_digest = sha256_hex(io::canonical(r.outcome.report));
  r.identical = r.actual_digest == r.expected_digest;
  return r;
}

std::vector<std::string> residual_histogram(const std::vector<double>& residuals, int width) {
  std::map<int, int> buckets;  // decade -> count; 1000 marks non-finite
  for (double r : residuals) {
    if (!std::isfinite(r)) {
      ++buckets[1000];
    } else {
      ++buckets[std::clamp(static_cast<int>(std::floor(std::log10(std::max(r, 1e-300)))), -17, 3)];
    }
  }
  int peak = 1;
  for (const auto& [decade, count] : buckets) peak = std::max(peak, count);
  std::vector<std::string> lines;
  for (const auto& [decade, count] : buckets) {
    char label[16];
    if (decade == 1000) {
      std::snprintf(label, sizeof label, "%6s", "inf");
    } else {
      std::snprintf(label, sizeof label, "1e%+03d", decade);
    }
    const int bar = std::max(1, count * width / peak);
    lines.push_back(std::string(label) + " |" + std::string(static_cast<std::size_t>(bar), '#') + " " +
                    std::to_string(count));
  }
  return lines;
}

}  // namespace dsp
