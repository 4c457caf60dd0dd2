#pragma once

// Combinatorics of Jordan normal forms: partitions, the correspondence with
// diagonal forms, and the integer invariants r, d and kappa of class tuples.

#include <cstddef>
#include <string>
#include <vector>

namespace dsp {

enum class Mode { additive, multiplicative };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

/// Non-increasing list of positive integers.
class Partition {
 public:
  /// Sorts the parts; throws Error(InvalidInput) when empty or a part is < 1.
  explicit Partition(std::vector<int> parts);

  const std::vector<int>& parts() const noexcept { return parts_; }
  int weight() const noexcept;
  std::size_t length() const noexcept { return parts_.size(); }
  int largest() const noexcept { return parts_.front(); }

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<int> parts_;
};

Partition dual_partition(const Partition& p);

/// Eigenvalue multiplicities of a diagonalizable matrix, non-increasing.
class MultiplicityVector {
 public:
  /// Sorts the components and drops zeros; throws on negative components or
  /// a zero total.
  explicit MultiplicityVector(std::vector<int> components);

  const std::vector<int>& components() const noexcept { return components_; }
  int total() const noexcept;

  friend bool operator==(const MultiplicityVector&, const MultiplicityVector&) = default;

 private:
  std::vector<int> components_;
};

struct EigenSlot {
  std::string label;
  Partition blocks;

  friend bool operator==(const EigenSlot&, const EigenSlot&) = default;
};

class JordanForm {
 public:
  /// Throws Error(InvalidInput) when the block sizes do not add up to n, when
  /// n < 1, or when two slots share a label.
  JordanForm(int n, std::vector<EigenSlot> slots);

  /// Diagonal form with one slot per (non-zero) component, labelled e1, e2, ...
  static JordanForm diagonal(const MultiplicityVector& mv);

  int n() const noexcept { return n_; }
  const std::vector<EigenSlot>& slots() const noexcept { return slots_; }

  bool is_diagonal() const noexcept;
  /// One slot whose blocks are all of size 1.
  bool is_scalar() const noexcept;
  /// Number of Jordan blocks of the slot with the most blocks (= n - r).
  int max_block_count() const noexcept;
  /// Algebraic multiplicity of slot k.
  int multiplicity(std::size_t k) const { return slots_.at(k).blocks.weight(); }

  friend bool operator==(const JordanForm&, const JordanForm&) = default;

 private:
  int n_;
  std::vector<EigenSlot> slots_;
};

class ClassTuple {
 public:
  /// Requires at least two forms, all of size n.
  ClassTuple(Mode mode, int n, std::vector<JordanForm> forms);

  Mode mode() const noexcept { return mode_; }
  int n() const noexcept { return n_; }
  const std::vector<JordanForm>& forms() const noexcept { return forms_; }

  friend bool operator==(const ClassTuple&, const ClassTuple&) = default;

 private:
  Mode mode_;
  int n_;
  std::vector<JordanForm> forms_;
};

/// Merge of the duals of each slot's block partition.
MultiplicityVector corresponding_diagonal(const JordanForm& j);

/// r(J) = n - (largest number of blocks sharing one eigenvalue).
int rank_defect(const JordanForm& j);

/// d(J) = n^2 - sum of squared components of the corresponding diagonal MV.
int class_dimension(const JordanForm& j);

/// Multiplicity vector of a diagonal form. Throws when j is not diagonal.
MultiplicityVector multiplicity_vector(const JordanForm& j);

int rigidity_index(const ClassTuple& t);

struct ConditionReport {
  bool alpha = false;
  bool beta = false;
  bool omega = false;
  int sum_d = 0;
  int sum_r = 0;
  /// min over j of sum_{i != j} r_i
  int min_beta_sum = 0;
  int n = 0;
};

ConditionReport check_conditions(const ClassTuple& t);

/// Tuple of the diagonal forms corresponding to each form of t.
ClassTuple corresponding_diagonal_tuple(const ClassTuple& t);

/// Shorthand for tuples of diagonal forms.
ClassTuple diagonal_tuple(Mode mode, const std::vector<std::vector<int>>& pmv);

}  // namespace dsp
