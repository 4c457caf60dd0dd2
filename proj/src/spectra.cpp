#include "dsp/spectra.hpp"

#include "dsp/error.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace dsp {

Spectrum::Spectrum(Mode mode, std::vector<std::vector<SpectrumEntry>> forms)
    : mode_(mode), forms_(std::move(forms)) {
  if (forms_.size() < 2) throw Error(ErrorKind::InvalidInput, "a spectrum needs at least two forms");
  for (std::size_t j = 0; j < forms_.size(); ++j) {
    auto& form = forms_[j];
    if (form.empty()) throw Error(ErrorKind::InvalidInput, "form " + std::to_string(j) + " has no eigenvalues");
    int size = 0;
    std::set<Rational> seen;
    for (auto& e : form) {
      if (e.mult < 1) throw Error(ErrorKind::InvalidInput, "multiplicities must be positive");
      if (mode_ == Mode::multiplicative) e.value = frac(e.value);
      if (!seen.insert(e.value).second) {
        throw Error(ErrorKind::InvalidInput,
                    "eigenvalue " + to_string(e.value) + " repeated in form " + std::to_string(j));
      }
      size += e.mult;
    }
    if (j == 0) n_ = size;
    if (size != n_) {
      throw Error(ErrorKind::InvalidInput, "form " + std::to_string(j) + " has size " + std::to_string(size) +
                                               ", expected " + std::to_string(n_));
    }
  }
}

Rational Spectrum::weighted_total() const {
  Rational total = 0;
  for (const auto& form : forms_) {
    for (const auto& e : form) total += e.value * e.mult;
  }
  return total;
}

ClassTuple Spectrum::diagonal_classes() const {
  std::vector<JordanForm> out;
  for (const auto& form : forms_) {
    std::vector<EigenSlot> slots;
    for (std::size_t i = 0; i < form.size(); ++i) {
      slots.push_back({"e" + std::to_string(i + 1), Partition(std::vector<int>(static_cast<std::size_t>(form[i].mult), 1))});
    }
    out.emplace_back(n_, std::move(slots));
  }
  return ClassTuple(mode_, n_, std::move(out));
}

Rational eigen_constraint_defect(const Spectrum& s) {
  const Rational total = s.weighted_total();
  return s.mode() == Mode::additive ? total : frac(total);
}

void validate_spectrum(const Spectrum& s) {
  const Rational defect = eigen_constraint_defect(s);
  if (defect != 0) throw Error(ErrorKind::ConstraintViolated, "eigenvalue constraint defect " + to_string(defect));
}

namespace {

int multiplicity_gcd(const Spectrum& s) {
  int q = 0;
  for (const auto& form : s.forms()) {
    for (const auto& e : form) q = std::gcd(q, e.mult);
  }
  return q;
}

Rational reduce(Mode mode, const Rational& r) { return mode == Mode::multiplicative ? frac(r) : r; }

struct Candidate {
  std::vector<int> counts;
  Rational sum;
};

// Bounded compositions of `kcard` over the eigenvalues of one form.
std::vector<Candidate> form_candidates(const std::vector<SpectrumEntry>& form, int kcard, Mode mode) {
  std::vector<Candidate> out;
  std::vector<int> counts(form.size(), 0);
  std::vector<int> suffix(form.size() + 1, 0);
  for (std::size_t i = form.size(); i-- > 0;) suffix[i] = suffix[i + 1] + form[i].mult;
  auto rec = [&](auto&& self, std::size_t i, int left, const Rational& sum) -> void {
    if (i == form.size()) {
      if (left == 0) out.push_back({counts, reduce(mode, sum)});
      return;
    }
    if (left > suffix[i]) return;
    const int hi = std::min(left, form[i].mult);
    for (int c = 0; c <= hi; ++c) {
      counts[i] = c;
      self(self, i + 1, left - c, sum + form[i].value * c);
    }
    counts[i] = 0;
  };
  rec(rec, 0, kcard, Rational(0));
  return out;
}

}  // namespace

GcdData compute_gcd_data(const Spectrum& s) {
  GcdData g;
  g.q = multiplicity_gcd(s);
  if (s.mode() == Mode::multiplicative) {
    // the weighted total is an integer on valid spectra
    const Rational scaled = s.weighted_total() / g.q;
    g.xi_angle = frac(scaled);
    g.k = static_cast<int>(numerator_of(g.xi_angle * g.q));
    g.l = g.k == 0 ? g.q : std::gcd(g.q, g.k);
  } else {
    // dividing all multiplicities by any divisor of q keeps the sum at zero
    g.k = 0;
    g.xi_angle = 0;
    g.l = g.q;
  }
  g.primitive = std::gcd(g.k, g.q) == 1;
  return g;
}

void visit_relations(const Spectrum& s, int kcard, std::uint64_t cap,
                     const std::function<bool(const Relation&)>& visitor) {
  const int n = s.n();
  if (kcard < 1 || kcard >= n) {
    throw Error(ErrorKind::InvalidInput, "relation cardinality must lie in [1, n-1]");
  }
  const Mode mode = s.mode();
  const auto& forms = s.forms();
  std::vector<std::vector<Candidate>> cands;
  long double total = 1;
  for (const auto& form : forms) {
    cands.push_back(form_candidates(form, kcard, mode));
    total *= static_cast<long double>(cands.back().size());
  }
  if (total > static_cast<long double>(cap)) {
    throw Error(ErrorKind::BudgetExceeded, "relation enumeration needs about " +
                                               std::to_string(static_cast<double>(total)) +
                                               " candidates, cap is " + std::to_string(cap));
  }

  // Meet in the middle: walk the product of all forms but the last and look
  // the required remainder up among the last form's sums.
  const std::size_t last = forms.size() - 1;
  std::map<Rational, std::vector<std::size_t>> last_by_sum;
  for (std::size_t i = 0; i < cands[last].size(); ++i) last_by_sum[cands[last][i].sum].push_back(i);

  Relation rel;
  rel.kcard = kcard;
  rel.chosen.resize(forms.size());
  bool keep_going = true;
  auto rec = [&](auto&& self, std::size_t j, const Rational& acc) -> void {
    if (!keep_going) return;
    if (j == last) {
      auto it = last_by_sum.find(reduce(mode, -acc));
      if (it == last_by_sum.end()) return;
      for (std::size_t idx : it->second) {
        rel.chosen[last] = cands[last][idx].counts;
        if (!visitor(rel)) {
          keep_going = false;
          return;
        }
      }
      return;
    }
    for (const auto& c : cands[j]) {
      rel.chosen[j] = c.counts;
      self(self, j + 1, acc + c.sum);
      if (!keep_going) return;
    }
  };
  rec(rec, 0, Rational(0));
}

std::vector<Relation> enumerate_relations(const Spectrum& s, int kcard, std::uint64_t cap) {
  std::vector<Relation> out;
  visit_relations(s, kcard, cap, [&](const Relation& r) {
    out.push_back(r);
    return true;
  });
  return out;
}

GenericityResult is_generic(const Spectrum& s, std::uint64_t cap) {
  GenericityResult res;
  // The complement of a relation of cardinality k is one of cardinality n - k,
  // so cardinalities up to n / 2 decide the question.
  for (int k = 1; 2 * k <= s.n() && res.generic; ++k) {
    visit_relations(s, k, cap, [&](const Relation& r) {
      res.generic = false;
      res.witness = r;
      return false;
    });
  }
  return res;
}

bool is_basic_corollary(const Relation& r, const Spectrum& s, int l) {
  if (l <= 1) return false;
  if (static_cast<long long>(r.kcard) * l % s.n() != 0) return false;
  const long long t = static_cast<long long>(r.kcard) * l / s.n();
  if (t < 1 || t >= l) return false;
  for (std::size_t j = 0; j < s.forms().size(); ++j) {
    for (std::size_t i = 0; i < s.forms()[j].size(); ++i) {
      if (static_cast<long long>(r.chosen[j][i]) * l != t * s.forms()[j][i].mult) return false;
    }
  }
  return true;
}

RelativeGenericityResult is_relatively_generic(const Spectrum& s, std::uint64_t cap) {
  RelativeGenericityResult res;
  res.gcd = compute_gcd_data(s);
  const int l = res.gcd.q > 1 ? res.gcd.l : 1;
  for (int k = 1; 2 * k <= s.n() && res.relatively_generic; ++k) {
    visit_relations(s, k, cap, [&](const Relation& r) {
      if (is_basic_corollary(r, s, l)) return true;
      res.relatively_generic = false;
      res.offending = r;
      return false;
    });
  }
  return res;
}

namespace {

std::vector<int> primes_between(int lo, int hi) {
  std::vector<char> sieve(static_cast<std::size_t>(hi) + 1, 1);
  std::vector<int> out;
  for (int i = 2; i <= hi; ++i) {
    if (!sieve[static_cast<std::size_t>(i)]) continue;
    if (i >= lo) out.push_back(i);
    for (long long k = static_cast<long long>(i) * i; k <= hi; k += i) sieve[static_cast<std::size_t>(k)] = 0;
  }
  return out;
}

std::uint64_t draw(std::mt19937_64& rng, std::uint64_t bound) { return rng() % bound; }

}  // namespace

Spectrum sample_spectrum(const std::vector<MultiplicityVector>& pmv, Mode mode, const SampleTarget& target,
                         std::uint64_t seed, const SampleOptions& options) {
  if (pmv.size() < 2) throw Error(ErrorKind::InvalidInput, "need at least two multiplicity vectors");
  const int n = pmv.front().total();
  int q = 0;
  std::size_t free_count = 0;
  for (const auto& mv : pmv) {
    if (mv.total() != n) throw Error(ErrorKind::InvalidInput, "multiplicity vectors of different sizes");
    for (int m : mv.components()) q = std::gcd(q, m);
    free_count += mv.components().size();
  }
  --free_count;  // the last eigenvalue is solved for

  const bool want_generic = target.kind == SampleTarget::Kind::generic;
  int k = 0;
  std::mt19937_64 rng(seed);
  if (mode == Mode::additive) {
    if (target.xi_angle) throw Error(ErrorKind::InvalidTarget, "xi is only defined for multiplicative spectra");
    if (want_generic && q > 1) {
      throw Error(ErrorKind::InvalidTarget, "additive spectra with q > 1 always satisfy the basic relation");
    }
  } else {
    if (target.xi_angle) {
      const Rational scaled = frac(*target.xi_angle) * q;
      if (!is_integer(scaled)) {
        throw Error(ErrorKind::InvalidTarget,
                    "xi angle " + to_string(*target.xi_angle) + " is not a multiple of 1/" + std::to_string(q));
      }
      k = static_cast<int>(numerator_of(scaled));
    } else if (want_generic) {
      std::vector<int> units;
      for (int c = 0; c < q; ++c) {
        if (std::gcd(c, q) == 1) units.push_back(c);
      }
      k = units[draw(rng, units.size())];
    }
    if (want_generic && std::gcd(k, q) != 1) {
      throw Error(ErrorKind::InvalidTarget, "a non-primitive xi forces the basic relation; ask for relative genericity");
    }
  }

  const auto primes = primes_between(std::max(2, options.denominator_bound / 4), options.denominator_bound);
  if (primes.size() < free_count) {
    throw Error(ErrorKind::InvalidTarget, "denominator bound too small for " + std::to_string(free_count) +
                                              " independent eigenvalues");
  }

  for (int attempt = 0; attempt < options.max_rejections; ++attempt) {
    // distinct primes, chosen without replacement
    std::vector<int> pool = primes;
    std::vector<std::vector<SpectrumEntry>> forms;
    Rational scaled_rest = 0;  // sum of value * mult / q over the free eigenvalues
    for (std::size_t j = 0; j < pmv.size(); ++j) {
      std::vector<SpectrumEntry> form;
      const auto& comps = pmv[j].components();
      for (std::size_t i = 0; i < comps.size(); ++i) {
        const bool is_last = j + 1 == pmv.size() && i + 1 == comps.size();
        if (is_last) break;
        const std::size_t pick = draw(rng, pool.size());
        const int p = pool[pick];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
        Rational value;
        if (mode == Mode::multiplicative) {
          value = Rational(1 + static_cast<long long>(draw(rng, static_cast<std::uint64_t>(p - 1))), p);
        } else {
          const long long a = 1 + static_cast<long long>(draw(rng, static_cast<std::uint64_t>(p - 1)));
          value = Rational(draw(rng, 2) ? a : -a, p);
        }
        form.push_back({value, comps[i]});
        scaled_rest += value * comps[i] / q;
      }
      forms.push_back(std::move(form));
    }
    const int last_mult = pmv.back().components().back();
    Rational last_value;
    if (mode == Mode::multiplicative) {
      // last_mult/q * theta = k/q - rest (mod 1)
      const int reduced = last_mult / q;
      const auto t = static_cast<long long>(draw(rng, static_cast<std::uint64_t>(reduced)));
      last_value = frac((Rational(k, q) - scaled_rest + t) / reduced);
    } else {
      last_value = -scaled_rest * q / last_mult;
    }
    auto& last_form = forms.back();
    const bool clash = std::any_of(last_form.begin(), last_form.end(),
                                   [&](const SpectrumEntry& e) { return e.value == last_value; });
    if (clash) continue;
    last_form.push_back({last_value, last_mult});

    Spectrum s(mode, std::move(forms));
    validate_spectrum(s);
    if (want_generic) {
      if (is_generic(s, options.relation_cap).generic) return s;
    } else if (is_relatively_generic(s, options.relation_cap).relatively_generic) {
      return s;
    }
  }
  throw Error(ErrorKind::SamplingExhausted,
              "no admissible spectrum after " + std::to_string(options.max_rejections) + " attempts");
}

int block_count_gcd(const std::vector<JordanForm>& forms) {
  int d = 0;
  for (const auto& f : forms) {
    for (const auto& slot : f.slots()) {
      std::map<int, int> count_by_size;
      for (int b : slot.blocks.parts()) ++count_by_size[b];
      for (const auto& [size, count] : count_by_size) d = std::gcd(d, count);
    }
  }
  return d;
}

ChainStructure caseA_chain_structure(const std::vector<Rational>& s_angles, const Rational& p12,
                                     const Rational& p34, const Rational& xi_angle) {
  const int n = static_cast<int>(s_angles.size());
  if (n == 0 || n % 2 != 0) throw Error(ErrorKind::InconsistentChains, "need an even, non-zero number of eigenvalues");
  if (frac(p12 - p34) != frac(xi_angle)) {
    throw Error(ErrorKind::InconsistentChains, "xi does not equal the ratio of the two pairing products");
  }
  std::map<Rational, int> pool;
  for (const auto& s : s_angles) ++pool[frac(s)];
  auto take = [&](const Rational& v) {
    auto it = pool.find(v);
    if (it == pool.end()) {
      throw Error(ErrorKind::InconsistentChains, "eigenvalue " + to_string(v) + " has no partner");
    }
    if (--it->second == 0) pool.erase(it);
  };

  const Rational xi = frac(xi_angle);
  std::vector<std::vector<Rational>> chains;
  while (!pool.empty()) {
    const Rational first = pool.begin()->first;
    std::vector<Rational> chain;
    Rational s = first;
    while (true) {
      take(s);
      const Rational partner = frac(p12 - s);  // t-pair: s * t(s) = p12
      take(partner);
      chain.push_back(s);
      chain.push_back(partner);
      s = frac(p34 - partner);  // u-pair: t(s) * u(t(s)) = p34
      if (s == first) break;
      if (static_cast<int>(chain.size()) >= n) {
        throw Error(ErrorKind::InconsistentChains, "chain does not close");
      }
    }
    // s_{2k+1} = xi^{-1} s_{2k-1}, s_{2k+2} = xi s_{2k} (1-based)
    for (std::size_t i = 2; i < chain.size(); ++i) {
      const Rational expected = (i % 2 == 0) ? frac(chain[i - 2] - xi) : frac(chain[i - 2] + xi);
      if (chain[i] != expected) throw Error(ErrorKind::InconsistentChains, "xi recurrence violated");
    }
    chains.push_back(std::move(chain));
  }

  ChainStructure out;
  out.m = static_cast<int>(chains.front().size()) / 2 + 1;
  std::map<std::vector<Rational>, std::size_t> index_of_set;
  for (auto& chain : chains) {
    if (static_cast<int>(chain.size()) != 2 * out.m - 2) {
      throw Error(ErrorKind::InconsistentChains, "chains of different lengths");
    }
    auto key = chain;
    std::sort(key.begin(), key.end());
    auto [it, inserted] = index_of_set.emplace(key, out.sets.size());
    if (inserted) {
      out.sets.push_back({std::move(chain), 1});
    } else {
      ++out.sets[it->second].multiplicity;
    }
  }
  const int half = n / 2;
  out.divides_half_n = half % (out.m - 1) == 0;
  out.below_half_n = out.m - 1 < half;
  return out;
}

}  // namespace dsp
