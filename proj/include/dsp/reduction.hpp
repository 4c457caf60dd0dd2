#pragma once

#include "dsp/jnf.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dsp {

struct PsiStep {
  ClassTuple input;
  int n1;
  /// Per form, the index of the eigenvalue slot whose blocks were shortened.
  std::vector<std::size_t> chosen_slots;
  ClassTuple output;
};

/// Slots of `form` having the maximal number of Jordan blocks, in stored order.
std::vector<std::size_t> maximal_slots(const JordanForm& form);

/// One application of the reduction. For every form a slot with the maximal
/// block count is chosen (the first one unless `slot_choice` overrides it;
/// an override must name one of `maximal_slots`), and its n - n1 smallest
/// blocks lose one row each.
///
/// Throws OmegaHolds, BetaFails or SizeOne when the step is undefined.
PsiStep psi_step(const ClassTuple& t, std::span<const std::size_t> slot_choice = {});

/// Same step on multiplicity vectors: the largest component of every MV drops
/// by n - n1. Only valid for tuples of diagonal forms.
std::vector<MultiplicityVector> psi_step_diagonal(const std::vector<MultiplicityVector>& pmv);

enum class Verdict { solvable, not_solvable, invalid_input };
enum class FailedCondition { alpha, beta };

std::string to_string(Verdict v);
std::string to_string(FailedCondition c);

struct DecisionTrace {
  ClassTuple initial;
  ConditionReport initial_conditions;
  int kappa = 0;
  std::vector<PsiStep> steps;
  int final_n = 0;
  Verdict verdict = Verdict::invalid_input;
  std::optional<FailedCondition> failed_condition;
  /// Index into `steps` (0 = before any step) where a condition failed.
  std::optional<std::size_t> failed_at_step;
  /// true when the iteration stopped because omega held (rather than at size 1)
  bool stopped_on_omega = false;

  const ClassTuple& final_tuple() const { return steps.empty() ? initial : steps.back().output; }
};

/// Iterates psi_step while it is defined and reports whether the tuple is
/// solvable for generic eigenvalues. beta is re-checked before every step;
/// alpha only on the initial tuple.
DecisionTrace decide_generic(const ClassTuple& t);

enum class StopTag { A, B, C, D, none };

std::string to_string(StopTag tag);

struct StopCase {
  StopTag tag = StopTag::none;
  int d_param = 0;
};

/// Matches a terminal PMV (scalar MVs "(n)" already removed or not) against
/// the four kappa = 0 stop patterns.
StopCase match_stop_pattern(const std::vector<MultiplicityVector>& pmv);

/// Decides the corresponding diagonal tuple and matches its terminal PMV.
/// Returns tag none for kappa != 0, for tuples that stop at size 1, and for
/// unsolvable tuples.
StopCase classify_stop(const ClassTuple& t);

/// Like classify_stop, but throws KappaNonZero when kappa != 0.
StopCase classify_kappa0_stop(const ClassTuple& t);

/// The PMV of Case A-D with parameter d.
std::vector<std::vector<int>> stop_pattern(StopTag tag, int d);

}  // namespace dsp
