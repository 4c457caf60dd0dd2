#include "dsp/reduction.hpp"

#include "dsp/error.hpp"

#include <algorithm>
#include <functional>

namespace dsp {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::solvable: return "solvable";
    case Verdict::not_solvable: return "not_solvable";
    case Verdict::invalid_input: return "invalid_input";
  }
  return "?";
}

std::string to_string(FailedCondition c) { return c == FailedCondition::alpha ? "alpha" : "beta"; }

std::string to_string(StopTag tag) {
  switch (tag) {
    case StopTag::A: return "A";
    case StopTag::B: return "B";
    case StopTag::C: return "C";
    case StopTag::D: return "D";
    case StopTag::none: return "none";
  }
  return "?";
}

std::vector<std::size_t> maximal_slots(const JordanForm& form) {
  const auto best = static_cast<std::size_t>(form.max_block_count());
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < form.slots().size(); ++k) {
    if (form.slots()[k].blocks.length() == best) out.push_back(k);
  }
  return out;
}

PsiStep psi_step(const ClassTuple& t, std::span<const std::size_t> slot_choice) {
  const int n = t.n();
  if (n == 1) throw Error(ErrorKind::SizeOne, "reduction is undefined for n = 1");
  const auto cond = check_conditions(t);
  if (!cond.beta) throw Error(ErrorKind::BetaFails, "condition beta fails");
  if (cond.omega) throw Error(ErrorKind::OmegaHolds, "condition omega holds");
  if (!slot_choice.empty() && slot_choice.size() != t.forms().size()) {
    throw Error(ErrorKind::InvalidInput, "slot choice must name one slot per form");
  }

  const int n1 = cond.sum_r - n;
  const int shrink = n - n1;
  std::vector<std::size_t> chosen;
  std::vector<JordanForm> forms;
  for (std::size_t j = 0; j < t.forms().size(); ++j) {
    const auto& form = t.forms()[j];
    const auto candidates = maximal_slots(form);
    std::size_t pick = candidates.front();
    if (!slot_choice.empty()) {
      pick = slot_choice[j];
      if (std::find(candidates.begin(), candidates.end(), pick) == candidates.end()) {
        throw Error(ErrorKind::InvalidInput, "slot choice does not have the maximal block count");
      }
    }
    chosen.push_back(pick);

    std::vector<EigenSlot> slots;
    for (std::size_t k = 0; k < form.slots().size(); ++k) {
      std::vector<int> blocks = form.slots()[k].blocks.parts();
      if (k == pick) {
        // blocks are non-increasing, so the smallest ones sit at the back
        for (int i = 0; i < shrink; ++i) --blocks[blocks.size() - 1 - static_cast<std::size_t>(i)];
        std::erase(blocks, 0);
      }
      if (!blocks.empty()) slots.push_back({form.slots()[k].label, Partition(std::move(blocks))});
    }
    forms.emplace_back(n1, std::move(slots));
  }
  return PsiStep{t, n1, std::move(chosen), ClassTuple(t.mode(), n1, std::move(forms))};
}

std::vector<MultiplicityVector> psi_step_diagonal(const std::vector<MultiplicityVector>& pmv) {
  if (pmv.size() < 2) throw Error(ErrorKind::InvalidInput, "need at least two multiplicity vectors");
  const int n = pmv.front().total();
  if (n == 1) throw Error(ErrorKind::SizeOne, "reduction is undefined for n = 1");
  int sum_r = 0;
  int max_r = 0;
  for (const auto& mv : pmv) {
    const int r = n - mv.components().front();
    sum_r += r;
    max_r = std::max(max_r, r);
  }
  if (sum_r - max_r < n) throw Error(ErrorKind::BetaFails, "condition beta fails");
  if (sum_r >= 2 * n) throw Error(ErrorKind::OmegaHolds, "condition omega holds");
  const int n1 = sum_r - n;
  std::vector<MultiplicityVector> out;
  for (const auto& mv : pmv) {
    auto c = mv.components();
    c.front() -= n - n1;
    out.emplace_back(std::move(c));
  }
  return out;
}

DecisionTrace decide_generic(const ClassTuple& t) {
  DecisionTrace trace{t, check_conditions(t), rigidity_index(t), {}, t.n(), Verdict::invalid_input,
                      std::nullopt, std::nullopt, false};
  if (t.n() == 1) {
    trace.verdict = Verdict::solvable;
    return trace;
  }
  if (!trace.initial_conditions.beta) {
    trace.verdict = Verdict::not_solvable;
    trace.failed_condition = FailedCondition::beta;
    trace.failed_at_step = 0;
    return trace;
  }
  if (!trace.initial_conditions.alpha) {
    trace.verdict = Verdict::not_solvable;
    trace.failed_condition = FailedCondition::alpha;
    trace.failed_at_step = 0;
    return trace;
  }

  const ClassTuple* current = &t;
  while (true) {
    if (current->n() == 1) {
      trace.verdict = Verdict::solvable;
      break;
    }
    const auto cond = check_conditions(*current);
    if (!cond.beta) {
      trace.verdict = Verdict::not_solvable;
      trace.failed_condition = FailedCondition::beta;
      trace.failed_at_step = trace.steps.size();
      break;
    }
    if (cond.omega) {
      trace.verdict = Verdict::solvable;
      trace.stopped_on_omega = true;
      break;
    }
    trace.steps.push_back(psi_step(*current));
    current = &trace.steps.back().output;
  }
  trace.final_n = trace.final_tuple().n();
  return trace;
}

std::vector<std::vector<int>> stop_pattern(StopTag tag, int d) {
  switch (tag) {
    case StopTag::A: return {{d, d}, {d, d}, {d, d}, {d, d}};
    case StopTag::B: return {{d, d, d}, {d, d, d}, {d, d, d}};
    case StopTag::C: return {{d, d, d, d}, {d, d, d, d}, {2 * d, 2 * d}};
    case StopTag::D: return {{d, d, d, d, d, d}, {2 * d, 2 * d, 2 * d}, {3 * d, 3 * d}};
    case StopTag::none: break;
  }
  return {};
}

StopCase match_stop_pattern(const std::vector<MultiplicityVector>& pmv) {
  std::vector<std::vector<int>> kept;
  for (const auto& mv : pmv) {
    if (mv.components().size() > 1) kept.push_back(mv.components());
  }
  // patterns are listed with longer MVs first
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  if (kept.empty()) return {};
  for (StopTag tag : {StopTag::A, StopTag::B, StopTag::C, StopTag::D}) {
    const int d = kept.front().back();
    if (d < 1) continue;
    if (stop_pattern(tag, d) == kept) return {tag, d};
  }
  return {};
}

StopCase classify_stop(const ClassTuple& t) {
  if (rigidity_index(t) != 0) return {};
  const auto trace = decide_generic(corresponding_diagonal_tuple(t));
  if (trace.verdict != Verdict::solvable || !trace.stopped_on_omega) return {};
  std::vector<MultiplicityVector> pmv;
  for (const auto& f : trace.final_tuple().forms()) pmv.push_back(multiplicity_vector(f));
  return match_stop_pattern(pmv);
}

StopCase classify_kappa0_stop(const ClassTuple& t) {
  const int kappa = rigidity_index(t);
  if (kappa != 0) throw Error(ErrorKind::KappaNonZero, "rigidity index is " + std::to_string(kappa));
  return classify_stop(t);
}

}  // namespace dsp
