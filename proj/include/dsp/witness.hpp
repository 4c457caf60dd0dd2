#pragma once

// Numerical search for matrix tuples in prescribed conjugacy classes whose
// product is I (multiplicative) or whose sum is 0 (additive), and diagnostics
// for the tuples found.

#include "dsp/jnf.hpp"
#include "dsp/linalg.hpp"
#include "dsp/spectra.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dsp {

/// A conjugacy class: a Jordan form plus an exact eigenvalue for every slot.
struct ConcreteClass {
  Mode mode = Mode::multiplicative;
  JordanForm jnf;
  std::vector<Rational> values;  // one per slot

  ConcreteClass(Mode mode, JordanForm jnf, std::vector<Rational> values);

  int n() const noexcept { return jnf.n(); }
  cd complex_value(std::size_t slot) const;
  /// Upper-triangular Jordan matrix: slots in order, blocks in stored order,
  /// ones on the superdiagonal inside each block.
  CMat normal_form() const;
  /// sum over eigenvalues (with multiplicity) of lambda^k, k = 1..kmax
  std::vector<cd> power_sums(int kmax) const;
};

std::vector<ConcreteClass> classes_from_spectrum(const Spectrum& s);

/// Pairs the slots of every form with the spectrum entries of the same form, in
/// order. Algebraic multiplicities must agree.
std::vector<ConcreteClass> classes_from(const ClassTuple& t, const Spectrum& s);

/// Spectrum carried by the classes (algebraic multiplicities).
Spectrum spectrum_of(std::span<const ConcreteClass> classes);

struct Witness {
  Mode mode = Mode::multiplicative;
  std::vector<CMat> matrices;
  double residual = 0.0;
  /// Optional conjugators with matrices[j] = frames[j] * G_j * frames[j]^{-1},
  /// G_j the normal form of class j. Empty when unknown.
  std::vector<CMat> frames;

  int n() const { return matrices.empty() ? 0 : static_cast<int>(matrices.front().rows()); }
};

/// ||M_1 ... M_{p+1} - I||_F or ||A_1 + ... + A_{p+1}||_F.
double tuple_residual(Mode mode, std::span<const CMat> matrices);

/// Class-membership defect: traces of the Lagrange idempotents (tr L_k(M) = m_k) plus the minimal polynomial
/// prod (M - lambda)^{largest block}.
double class_residual(const CMat& m, const ConcreteClass& c);

struct Diagnostics {
  double residual = 0.0;
  int burnside_dim = 0;
  int centralizer_dim = 0;
  std::optional<CMat> invariant_subspace;
  std::vector<double> class_residuals;

  bool irreducible(int n) const { return burnside_dim == n * n; }
};

struct SearchBudget {
  int restarts = 50;
  int iterations = 400;
};

struct SearchOptions {
  SearchBudget budget;
  std::uint64_t seed = 0;
  double tol = 1e-10;
  double rank_tol = 1e-8;
  int threads = 1;
  bool diagnose = true;
};

struct RestartOutcome {
  int index = 0;
  bool converged = false;
  double residual = 0.0;   // tuple residual after projecting the free matrix onto its class
  double objective = 0.0;  // final class-membership defect of the free matrix
  int iterations = 0;      // summed over attempts
  int attempts = 0;        // local solves started within the iteration budget
  int free_class = 0;      // index of the class fixed by the relation in the kept attempt
  std::optional<Witness> witness;
  std::optional<Diagnostics> diagnostics;
};

struct SearchReport {
  std::uint64_t seed = 0;
  SearchBudget budget;
  double tol = 0.0;
  std::vector<RestartOutcome> restarts;
  double best_residual = 0.0;
  double wall_time_s = 0.0;

  int converged_count() const;
  /// Converged restarts whose tuple generates the full matrix algebra.
  int irreducible_count(int n) const;
};

/// Multistart damped Gauss-Newton search. Every class but one semisimple
/// class is parametrized as Q_j G_j Q_j^{-1}; the remaining matrix is fixed by
/// the product/sum relation and driven into its class.
///
/// Within a restart, a local solve whose frames degenerate (condition number
/// growing by more than a fixed factor) is abandoned and a new one starts with
/// the next semisimple class as the free matrix, until the iteration budget of
/// the restart is spent. The attempt with the smallest defect is kept.
///
/// Throws SpectrumInvalid when the eigenvalues violate the trace/determinant
/// constraint. A report is always returned; check converged_count().
SearchReport search_tuple(std::span<const ConcreteClass> classes, const SearchOptions& options);

/// Splits every class into blocks of `block_size` whose sub-spectra satisfy the
/// constraint, solves each block with search_tuple and assembles the
/// block-diagonal tuple. Throws BlockSplitImpossible or NoConvergence.
Witness build_block_diagonal_witness(std::span<const ConcreteClass> classes, int block_size,
                                     const SearchOptions& options);

/// Recomputes residuals and all irreducibility diagnostics. Throws SizeMismatch.
Diagnostics verify_witness(const Witness& w, std::span<const ConcreteClass> classes, double rank_tol = 1e-8);

/// Q_j F_j Q_j^{-1} for every j.
std::vector<CMat> conjugate_frames(const std::vector<CMat>& frames, const std::vector<CMat>& forms);

/// Minimum-norm Newton steps on the frames (Q_j -> (I + E_j) Q_j) that drive
/// the product (or sum) relation to zero while every matrix stays in its class.
/// Stops at `target`, after `max_newton` steps or when a step does not help;
/// returns the final Frobenius defect.
double polish_frames(Mode mode, std::vector<CMat>& frames, const std::vector<CMat>& forms, int max_newton,
                     double target);

/// Frames for diagonalizable classes from eigenvectors, slot-ordered.
/// Throws InvalidInput for non-diagonalizable classes.
std::vector<CMat> frames_from_eigenvectors(const Witness& w, std::span<const ConcreteClass> classes);

}  // namespace dsp
