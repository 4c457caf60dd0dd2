// Acceptance suite: one PASS/FAIL line per criterion.

#include "dsp/deform.hpp"
#include "dsp/error.hpp"
#include "dsp/jnf.hpp"
#include "dsp/reduction.hpp"
#include "dsp/spectra.hpp"
#include "dsp/witness.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>

using namespace dsp;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) detail << "violated: " << what << "; ";
    ok = ok && cond;
  }
};

int failures = 0;

void criterion(int id, const char* title, double limit_s, const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.ok = false;
    out.detail << "exception: " << e.what() << "; ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs > limit_s) {
    out.ok = false;
    out.detail << "took longer than " << limit_s << " s; ";
  }
  failures += out.ok ? 0 : 1;
  std::printf("%s  %2d  %s  [%s%.2f s]\n", out.ok ? "PASS" : "FAIL", id, title, out.detail.str().c_str(), secs);
  std::fflush(stdout);
}

Rational R(long long p, long long q = 1) { return Rational(p, q); }

std::vector<MultiplicityVector> mvs(const std::vector<std::vector<int>>& pmv) {
  std::vector<MultiplicityVector> out;
  for (const auto& mv : pmv) out.emplace_back(mv);
  return out;
}

int hardware_threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

constexpr double kTol = 1e-10;

// Multistart evidence for a kappa = 0 family with xi = 1: no converged tuple may
// be irreducible, every one has a nontrivial centralizer and an invariant
// subspace, and a block-diagonal tuple exists.
void reducibility_evidence(Outcome& out, const std::vector<std::vector<int>>& pmv, int restarts, std::uint64_t seed,
                           int block_size, std::optional<int> subspace_dim) {
  const int n = std::accumulate(pmv[0].begin(), pmv[0].end(), 0);
  const Spectrum s = sample_spectrum(mvs(pmv), Mode::multiplicative, {SampleTarget::Kind::relatively_generic, R(0)}, seed);
  const auto rel = is_relatively_generic(s);
  out.require(rel.relatively_generic, "sampled spectrum relatively generic");
  out.require(rel.gcd.q > 1 && rel.gcd.xi_angle == 0, "q > 1 and xi = 1");
  out.require(n / rel.gcd.l == block_size, "block size n / l");
  const auto classes = classes_from_spectrum(s);

  SearchOptions opts;
  opts.seed = seed;
  opts.budget.restarts = restarts;
  opts.tol = kTol;
  opts.threads = hardware_threads();
  const SearchReport report = search_tuple(classes, opts);
  out.require(static_cast<int>(report.restarts.size()) == restarts, "restart count");
  int converged = 0;
  int irreducible = 0;
  std::map<int, int> dims;
  for (const auto& o : report.restarts) {
    if (!o.converged) continue;
    ++converged;
    const auto d = verify_witness(*o.witness, classes, opts.rank_tol);
    out.require(d.residual < kTol, "converged residual below tolerance");
    irreducible += d.irreducible(n) ? 1 : 0;
    out.require(d.centralizer_dim >= 2, "centralizer_dim >= 2");
    out.require(d.invariant_subspace.has_value(), "invariant subspace found");
    if (d.invariant_subspace) {
      const int k = static_cast<int>(d.invariant_subspace->cols());
      ++dims[k];
      out.require(k > 0 && k < n, "proper invariant subspace");
      if (subspace_dim) out.require(k == *subspace_dim, "invariant subspace of dimension " + std::to_string(*subspace_dim));
    }
  }
  out.require(irreducible == 0, "no irreducible witness");
  out.require(converged * 10 >= restarts, "at least 10% of restarts converged");

  SearchOptions bopts = opts;
  bopts.budget.restarts = 20;
  const Witness block = build_block_diagonal_witness(classes, block_size, bopts);
  const auto bd = verify_witness(block, classes, opts.rank_tol);
  out.require(bd.residual < kTol, "block-diagonal witness residual");
  for (double c : bd.class_residuals) out.require(c < 1e-8, "block-diagonal witness in its classes");
  out.require(!bd.irreducible(n), "block-diagonal witness reducible");

  out.detail << "n=" << n << " restarts=" << restarts << " converged=" << converged << " irreducible=" << irreducible
             << " subspace dims";
  for (const auto& [k, c] : dims) out.detail << " " << k << "x" << c;
  out.detail << ", block witness " << block_size << "x" << block_size << "; ";
}

}  // namespace

int main() {
  criterion(1, "corresponding diagonal form of J17", 1.0, [](Outcome& out) {
    const JordanForm j(17, {{"a", Partition({6, 4, 3})}, {"b", Partition({3, 1})}});
    const auto mv = corresponding_diagonal(j).components();
    out.require(mv == std::vector<int>{3, 3, 3, 2, 2, 1, 1, 1, 1}, "(3,3,3,2,2,1,1,1,1)");
    out.require(rank_defect(j) == oracle::min_rank(j), "r against min-rank oracle");
    out.require(class_dimension(j) == 17 * 17 - oracle::centralizer_dim(oracle::jordan_matrix(j)), "d against oracle");
  });

  criterion(2, "gcd data of three Jordan classes with block sizes 2, 3, 6", 1.0, [](Outcome& out) {
    const Spectrum original(Mode::multiplicative, {{{R(1, 4), 12}}, {{R(0), 12}}, {{R(0), 12}}});
    const auto g = compute_gcd_data(original);
    out.require(g.q == 12 && g.xi_angle == R(1, 4) && g.l == 3 && !g.primitive, "q=12, xi=i, l=3, non-primitive");

    const auto single = [](const char* label, int b, int c) {
      return JordanForm(b * c, {{label, Partition(std::vector<int>(c, b))}});
    };
    std::vector<MultiplicityVector> pmv;
    for (const auto& f : {single("a", 2, 6), single("b", 3, 4), single("c", 6, 2)}) pmv.push_back(corresponding_diagonal(f));
    out.require(pmv == mvs({{6, 6}, {4, 4, 4}, {2, 2, 2, 2, 2, 2}}), "corresponding diagonal PMV");
    out.require(block_count_gcd({single("a", 2, 6), single("b", 3, 4), single("c", 6, 2)}) == 2, "d = 2");

    const Spectrum deformed = sample_spectrum(pmv, Mode::multiplicative, {SampleTarget::Kind::generic, R(1, 2)}, 7);
    const auto h = compute_gcd_data(deformed);
    out.require(h.q == 2 && h.xi_angle == R(1, 2) && h.l == 1 && h.primitive, "q=2, xi=-1, primitive");
    out.require(is_relatively_generic(deformed).relatively_generic, "deformed spectrum relatively generic");
  });

  criterion(3, "kappa preserved by one reduction step on 1000 tuples", 5.0, [](Outcome& out) {
    std::mt19937_64 rng(1001);
    int steps = 0;
    int violations = 0;
    while (steps < 1000) {
      const int n = std::uniform_int_distribution<int>(2, 12)(rng);
      const auto t = oracle::random_tuple(rng, n, std::uniform_int_distribution<int>(3, 5)(rng));
      std::optional<PsiStep> step;
      try {
        step = psi_step(t);
      } catch (const Error&) {
        continue;
      }
      ++steps;
      violations += rigidity_index(step->output) != rigidity_index(t) ? 1 : 0;
    }
    out.require(violations == 0, std::to_string(violations) + " violations");
    out.detail << steps << " steps; ";
  });

  criterion(4, "r and d against min-rank and centralizer oracles on 500 JNFs", 30.0, [](Outcome& out) {
    std::mt19937_64 rng(404);
    int violations = 0;
    for (int i = 0; i < 500; ++i) {
      const int n = std::uniform_int_distribution<int>(1, 10)(rng);
      const auto j = oracle::random_jordan_form(rng, n);
      violations += rank_defect(j) != oracle::min_rank(j) ? 1 : 0;
      violations += class_dimension(j) != n * n - oracle::centralizer_dim(oracle::jordan_matrix(j)) ? 1 : 0;
    }
    out.require(violations == 0, std::to_string(violations) + " violations");
  });

  criterion(5, "stop classifier on the four families and on kappa != 0", 1.0, [](Outcome& out) {
    for (int d = 1; d <= 3; ++d) {
      const std::vector<std::pair<StopTag, std::vector<std::vector<int>>>> families = {
          {StopTag::A, {{d, d}, {d, d}, {d, d}, {d, d}}},
          {StopTag::B, {{d, d, d}, {d, d, d}, {d, d, d}}},
          {StopTag::C, {{d, d, d, d}, {d, d, d, d}, {2 * d, 2 * d}}},
          {StopTag::D, {{d, d, d, d, d, d}, {2 * d, 2 * d, 2 * d}, {3 * d, 3 * d}}}};
      for (const auto& [tag, pmv] : families) {
        const auto t = diagonal_tuple(Mode::multiplicative, pmv);
        out.require(rigidity_index(t) == 0, "kappa = 0");
        const auto c = classify_kappa0_stop(t);
        out.require(c.tag == tag && c.d_param == d, "case " + to_string(tag) + " d=" + std::to_string(d));
      }
    }
    std::mt19937_64 rng(55);
    int tested = 0;
    while (tested < 100) {
      const auto t = oracle::random_tuple(rng, std::uniform_int_distribution<int>(2, 12)(rng), 4);
      if (rigidity_index(t) == 0) continue;
      ++tested;
      out.require(classify_stop(t).tag == StopTag::none, "none for kappa != 0");
    }
  });

  criterion(6, "positive control: irreducible quadruple of 2x2 matrices", 60.0, [](Outcome& out) {
    const Spectrum s = sample_spectrum(mvs({{1, 1}, {1, 1}, {1, 1}, {1, 1}}), Mode::multiplicative, {}, 7);
    out.require(is_generic(s).generic, "generic spectrum");
    out.require(rigidity_index(s.diagonal_classes()) == 0, "kappa = 0");
    const auto classes = classes_from_spectrum(s);
    SearchOptions opts;
    opts.seed = 7;
    opts.budget.restarts = 50;
    opts.tol = kTol;
    const auto report = search_tuple(classes, opts);
    int good = 0;
    for (const auto& o : report.restarts) {
      if (!o.converged) continue;
      const auto d = verify_witness(*o.witness, classes);
      good += d.residual < kTol && d.burnside_dim == 4 && d.centralizer_dim == 1 ? 1 : 0;
    }
    out.require(good >= 1, "a witness with burnside_dim 4 and centralizer_dim 1");
    out.detail << good << "/50 irreducible witnesses, best residual " << report.best_residual << "; ";
  });

  criterion(7, "case A evidence: no irreducible quadruple for (2,2)^4", 600.0,
            [](Outcome& out) { reducibility_evidence(out, {{2, 2}, {2, 2}, {2, 2}, {2, 2}}, 200, 7, 2, 2); });

  criterion(8, "cases B, C, D evidence at the smallest sizes with q > 1", 1800.0, [](Outcome& out) {
    reducibility_evidence(out, {{2, 2, 2}, {2, 2, 2}, {2, 2, 2}}, 100, 7, 3, std::nullopt);
    reducibility_evidence(out, {{2, 2, 2, 2}, {2, 2, 2, 2}, {4, 4}}, 100, 7, 4, std::nullopt);
    reducibility_evidence(out, {{2, 2, 2, 2, 2, 2}, {4, 4, 4}, {6, 6}}, 100, 7, 6, std::nullopt);
  });

  criterion(9, "genericity against brute-force enumeration on 200 spectra", 60.0, [](Outcome& out) {
    std::mt19937_64 rng(909);
    int checked = 0;
    int disagreements = 0;
    int generic = 0;
    while (checked < 200) {
      const Mode mode = checked % 4 == 0 ? Mode::additive : Mode::multiplicative;
      const int n = std::uniform_int_distribution<int>(2, 6)(rng);
      const auto s = oracle::random_spectrum(rng, mode, n, std::uniform_int_distribution<int>(2, 4)(rng));
      if (!s) continue;
      ++checked;
      const bool expected = oracle::brute_force_generic(*s);
      generic += expected ? 1 : 0;
      disagreements += is_generic(*s).generic != expected ? 1 : 0;
    }
    out.require(disagreements == 0, std::to_string(disagreements) + " disagreements");
    out.detail << generic << " generic of 200; ";
  });

  criterion(10, "chain structure for n = 4, 8, 12", 1.0, [](Outcome& out) {
    int cases = 0;
    for (int n : {4, 8, 12}) {
      for (int order = 1; order <= n / 2; ++order) {
        if ((n / 2) % order != 0) continue;
        const Rational xi = order == 1 ? R(0) : R(1, order);
        const Rational p12(2, 7);
        const Rational p34 = frac(p12 - xi);
        // n / 2 chains worth of seeds, each chain closing after `order` steps
        std::vector<Rational> values;
        std::multiset<Rational> expected;
        for (int c = 0; c < n / (2 * order); ++c) {
          const Rational seed(c + 1, 97);
          for (int k = 0; k < order; ++k) {
            const Rational s = frac(seed - k * xi);
            values.push_back(s);
            values.push_back(frac(p12 - s));
          }
        }
        expected.insert(values.begin(), values.end());
        const auto cs = caseA_chain_structure(values, p12, p34, xi);
        ++cases;
        const int m1 = cs.m - 1;
        out.require(m1 == order, "m - 1 is the order of xi");
        out.require((n / 2) % m1 == 0 && cs.divides_half_n, "(m - 1) | n/2");
        std::multiset<Rational> seen;
        for (const auto& set : cs.sets) {
          const auto& v = set.values;
          out.require(static_cast<int>(v.size()) == 2 * cs.m - 2, "chain length 2m - 2");
          for (std::size_t i = 0; i + 1 < v.size(); ++i) {
            out.require(frac(v[i] + v[i + 1]) == (i % 2 == 0 ? frac(p12) : p34), "alternating pairings");
          }
          for (std::size_t i = 0; i + 2 < v.size(); ++i) {
            const Rational next = i % 2 == 0 ? frac(v[i] - xi) : frac(v[i] + xi);
            out.require(v[i + 2] == next, "xi recurrences");
          }
          for (int r = 0; r < set.multiplicity; ++r) seen.insert(v.begin(), v.end());
        }
        out.require(seen == expected, "chains cover the spectrum");
      }
    }
    out.detail << cases << " spectra; ";
  });

  criterion(11, "deformation of the positive control", 10.0, [](Outcome& out) {
    const Spectrum s = sample_spectrum(mvs({{1, 1}, {1, 1}, {1, 1}, {1, 1}}), Mode::multiplicative, {}, 7);
    const auto classes = classes_from_spectrum(s);
    SearchOptions opts;
    opts.seed = 7;
    opts.budget.restarts = 20;
    const auto report = search_tuple(classes, opts);
    const Witness* w = nullptr;
    for (const auto& o : report.restarts) {
      if (o.converged) {
        w = &*o.witness;
        break;
      }
    }
    out.require(w != nullptr, "starting witness");
    if (!w) return;
    auto forms = s.forms();
    forms[0][0].value += R(1, 50);
    forms[2][1].value -= R(1, 50);
    const Spectrum target(s.mode(), forms);
    const auto r = deform_tuple(*w, classes, target);
    double worst = 0.0;
    for (double x : r.step_residuals) worst = std::max(worst, x);
    out.require(worst < kTol, "every step residual below 1e-10");
    out.require(r.centralizer_dim == 1, "centralizer_dim 1 at the endpoint");
    out.require(spectrum_of(r.final_classes) == target, "endpoint classes");
    out.detail << r.step_params.size() - 1 << " steps, worst residual " << worst << "; ";
  });

  std::printf("%s: %d of 11 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
