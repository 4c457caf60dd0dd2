#pragma once

// Exact eigenvalue data. Additive eigenvalues are rationals; multiplicative
// eigenvalues are rational angles theta in [0, 1) standing for exp(2 pi i theta),
// so products of eigenvalues become sums of angles modulo 1.

#include "dsp/jnf.hpp"
#include "dsp/rational.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace dsp {

struct SpectrumEntry {
  Rational value;  // angle (multiplicative) or eigenvalue (additive)
  int mult = 1;

  friend bool operator==(const SpectrumEntry&, const SpectrumEntry&) = default;
};

class Spectrum {
 public:
  /// Normalizes multiplicative angles into [0, 1). Throws Error(InvalidInput)
  /// on repeated eigenvalues inside a form, non-positive multiplicities,
  /// forms of different sizes, or fewer than two forms.
  Spectrum(Mode mode, std::vector<std::vector<SpectrumEntry>> forms);

  Mode mode() const noexcept { return mode_; }
  int n() const noexcept { return n_; }
  const std::vector<std::vector<SpectrumEntry>>& forms() const noexcept { return forms_; }

  /// Sum over all eigenvalues counted with multiplicity.
  Rational weighted_total() const;

  /// Diagonal class tuple carrying these multiplicities.
  ClassTuple diagonal_classes() const;

  friend bool operator==(const Spectrum&, const Spectrum&) = default;

 private:
  Mode mode_;
  std::vector<std::vector<SpectrumEntry>> forms_;
  int n_ = 0;
};

/// The defect of the trace/determinant constraint: the weighted total
/// (additive) or its fractional part (multiplicative). Zero iff satisfied.
Rational eigen_constraint_defect(const Spectrum& s);

/// Throws Error(ConstraintViolated) carrying the exact defect.
void validate_spectrum(const Spectrum& s);

struct GcdData {
  int q = 1;
  int k = 0;
  Rational xi_angle;  // k / q
  int l = 1;
  bool primitive = true;  // gcd(k, q) == 1
};

GcdData compute_gcd_data(const Spectrum& s);

struct Relation {
  int kcard = 0;
  /// chosen[j][i] = how many copies of eigenvalue i of form j are taken
  std::vector<std::vector<int>> chosen;

  friend bool operator==(const Relation&, const Relation&) = default;
};

inline constexpr std::uint64_t kDefaultRelationCap = 100'000'000;

/// All per-form selections of kcard eigenvalues (with multiplicity) whose
/// total vanishes (additive) or is an integer (multiplicative).
/// Throws BudgetExceeded when the candidate count exceeds `cap`.
std::vector<Relation> enumerate_relations(const Spectrum& s, int kcard,
                                          std::uint64_t cap = kDefaultRelationCap);

/// Streaming form of enumerate_relations; the visitor returns false to stop.
void visit_relations(const Spectrum& s, int kcard, std::uint64_t cap,
                     const std::function<bool(const Relation&)>& visitor);

struct GenericityResult {
  bool generic = true;
  std::optional<Relation> witness;
};

GenericityResult is_generic(const Spectrum& s, std::uint64_t cap = kDefaultRelationCap);

/// Whether `r` takes every eigenvalue with the same fraction t / l (1 <= t < l)
/// of its full multiplicity, i.e. follows from the basic relation.
bool is_basic_corollary(const Relation& r, const Spectrum& s, int l);

struct RelativeGenericityResult {
  bool relatively_generic = true;
  std::optional<Relation> offending;
  GcdData gcd;
};

RelativeGenericityResult is_relatively_generic(const Spectrum& s,
                                               std::uint64_t cap = kDefaultRelationCap);

struct SampleTarget {
  enum class Kind { generic, relatively_generic };
  Kind kind = Kind::generic;
  /// Multiplicative only: the angle of xi; must be a multiple of 1/q.
  std::optional<Rational> xi_angle;
};

struct SampleOptions {
  int denominator_bound = 1000;
  int max_rejections = 500;
  std::uint64_t relation_cap = kDefaultRelationCap;
};

Spectrum sample_spectrum(const std::vector<MultiplicityVector>& pmv, Mode mode, const SampleTarget& target,
                         std::uint64_t seed, const SampleOptions& options = {});

/// gcd over forms, slots and sizes m of the number of blocks of size m.
int block_count_gcd(const std::vector<JordanForm>& forms);

struct ChainSet {
  /// s_1, s_2, ..., s_{2m-2} as angles; consecutive pairs alternate the t- and
  /// u-pairings
  std::vector<Rational> values;
  int multiplicity = 1;
};

struct ChainStructure {
  int m = 0;  // each chain has 2m - 2 eigenvalues
  std::vector<ChainSet> sets;
  bool divides_half_n = false;     // (m - 1) | (n / 2)
  bool below_half_n = false;       // m - 1 < n / 2
};

/// Splits the eigenvalues of S = M1 M2 (angles, size n) into chains built by
/// alternating the pairings s -> p12 - s and s -> p34 - s. Throws
/// InconsistentChains when no such pairing exists or xi != p12 - p34.
ChainStructure caseA_chain_structure(const std::vector<Rational>& s_angles, const Rational& p12,
                                     const Rational& p34, const Rational& xi_angle);

}  // namespace dsp
