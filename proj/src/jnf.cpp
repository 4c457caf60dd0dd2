#include "dsp/jnf.hpp"

#include "dsp/error.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>

namespace dsp {

std::string to_string(Mode mode) { return mode == Mode::additive ? "additive" : "multiplicative"; }

Mode parse_mode(const std::string& text) {
  if (text == "additive") return Mode::additive;
  if (text == "multiplicative") return Mode::multiplicative;
  throw Error(ErrorKind::InvalidInput, "unknown mode '" + text + "'");
}

Partition::Partition(std::vector<int> parts) : parts_(std::move(parts)) {
  if (parts_.empty()) throw Error(ErrorKind::InvalidInput, "empty partition");
  for (int p : parts_) {
    if (p < 1) throw Error(ErrorKind::InvalidInput, "partition parts must be positive");
  }
  std::sort(parts_.begin(), parts_.end(), std::greater<>());
}

int Partition::weight() const noexcept { return std::accumulate(parts_.begin(), parts_.end(), 0); }

Partition dual_partition(const Partition& p) {
  // column heights of the Young diagram
  std::vector<int> dual(static_cast<std::size_t>(p.largest()), 0);
  for (int part : p.parts()) {
    for (int i = 0; i < part; ++i) ++dual[static_cast<std::size_t>(i)];
  }
  return Partition(std::move(dual));
}

MultiplicityVector::MultiplicityVector(std::vector<int> components) {
  for (int c : components) {
    if (c < 0) throw Error(ErrorKind::InvalidInput, "negative multiplicity");
    if (c > 0) components_.push_back(c);
  }
  if (components_.empty()) throw Error(ErrorKind::InvalidInput, "multiplicity vector with zero total");
  std::sort(components_.begin(), components_.end(), std::greater<>());
}

int MultiplicityVector::total() const noexcept {
  return std::accumulate(components_.begin(), components_.end(), 0);
}

JordanForm::JordanForm(int n, std::vector<EigenSlot> slots) : n_(n), slots_(std::move(slots)) {
  if (n_ < 1) throw Error(ErrorKind::InvalidInput, "Jordan form size must be >= 1");
  if (slots_.empty()) throw Error(ErrorKind::InvalidInput, "Jordan form without eigenvalues");
  std::set<std::string> labels;
  int total = 0;
  for (const auto& slot : slots_) {
    if (!labels.insert(slot.label).second) {
      throw Error(ErrorKind::InvalidInput, "duplicate eigenvalue label '" + slot.label + "'");
    }
    total += slot.blocks.weight();
  }
  if (total != n_) {
    throw Error(ErrorKind::InvalidInput,
                "block sizes sum to " + std::to_string(total) + ", expected " + std::to_string(n_));
  }
}

JordanForm JordanForm::diagonal(const MultiplicityVector& mv) {
  std::vector<EigenSlot> slots;
  int k = 0;
  for (int m : mv.components()) {
    slots.push_back({"e" + std::to_string(++k), Partition(std::vector<int>(static_cast<std::size_t>(m), 1))});
  }
  return JordanForm(mv.total(), std::move(slots));
}

bool JordanForm::is_diagonal() const noexcept {
  return std::all_of(slots_.begin(), slots_.end(), [](const EigenSlot& s) { return s.blocks.largest() == 1; });
}

bool JordanForm::is_scalar() const noexcept { return slots_.size() == 1 && is_diagonal(); }

int JordanForm::max_block_count() const noexcept {
  std::size_t best = 0;
  for (const auto& s : slots_) best = std::max(best, s.blocks.length());
  return static_cast<int>(best);
}

ClassTuple::ClassTuple(Mode mode, int n, std::vector<JordanForm> forms)
    : mode_(mode), n_(n), forms_(std::move(forms)) {
  if (n_ < 1) throw Error(ErrorKind::InvalidInput, "tuple size must be >= 1");
  if (forms_.size() < 2) throw Error(ErrorKind::InvalidInput, "a class tuple needs at least two forms");
  for (std::size_t j = 0; j < forms_.size(); ++j) {
    if (forms_[j].n() != n_) {
      throw Error(ErrorKind::InvalidInput, "form " + std::to_string(j) + " has size " +
                                               std::to_string(forms_[j].n()) + ", expected " +
                                               std::to_string(n_));
    }
  }
}

MultiplicityVector corresponding_diagonal(const JordanForm& j) {
  std::vector<int> merged;
  for (const auto& slot : j.slots()) {
    const auto dual = dual_partition(slot.blocks);
    merged.insert(merged.end(), dual.parts().begin(), dual.parts().end());
  }
  return MultiplicityVector(std::move(merged));
}

int rank_defect(const JordanForm& j) { return j.n() - j.max_block_count(); }

int class_dimension(const JordanForm& j) {
  int d = j.n() * j.n();
  const auto mv = corresponding_diagonal(j);
  for (int m : mv.components()) d -= m * m;
  return d;
}

MultiplicityVector multiplicity_vector(const JordanForm& j) {
  if (!j.is_diagonal()) throw Error(ErrorKind::InvalidInput, "multiplicity vector of a non-diagonal form");
  std::vector<int> mv;
  for (const auto& s : j.slots()) mv.push_back(static_cast<int>(s.blocks.length()));
  return MultiplicityVector(std::move(mv));
}

int rigidity_index(const ClassTuple& t) {
  int kappa = 2 * t.n() * t.n();
  for (const auto& f : t.forms()) kappa -= class_dimension(f);
  return kappa;
}

ConditionReport check_conditions(const ClassTuple& t) {
  ConditionReport rep;
  rep.n = t.n();
  std::vector<int> r;
  for (const auto& f : t.forms()) {
    rep.sum_d += class_dimension(f);
    r.push_back(rank_defect(f));
  }
  rep.sum_r = std::accumulate(r.begin(), r.end(), 0);
  rep.min_beta_sum = rep.sum_r - *std::max_element(r.begin(), r.end());
  const int n = t.n();
  rep.alpha = rep.sum_d >= 2 * n * n - 2;
  rep.beta = rep.min_beta_sum >= n;
  rep.omega = rep.sum_r >= 2 * n;
  return rep;
}

ClassTuple corresponding_diagonal_tuple(const ClassTuple& t) {
  std::vector<JordanForm> forms;
  for (const auto& f : t.forms()) forms.push_back(JordanForm::diagonal(corresponding_diagonal(f)));
  return ClassTuple(t.mode(), t.n(), std::move(forms));
}

ClassTuple diagonal_tuple(Mode mode, const std::vector<std::vector<int>>& pmv) {
  std::vector<JordanForm> forms;
  for (const auto& mv : pmv) forms.push_back(JordanForm::diagonal(MultiplicityVector(mv)));
  if (forms.empty()) throw Error(ErrorKind::InvalidInput, "empty polymultiplicity vector");
  const int n = forms.front().n();
  return ClassTuple(mode, n, std::move(forms));
}

}  // namespace dsp
