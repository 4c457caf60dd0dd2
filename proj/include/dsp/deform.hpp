#pragma once

// Continuation of a matrix tuple with trivial centralizer along a straight
// path of eigenvalues: the eigenvalue data moves, the conjugating frames are
// Newton-corrected so that the product (or sum) relation keeps holding.

#include "dsp/witness.hpp"

#include <vector>

namespace dsp {

struct DeformOptions {
  int steps = 20;
  double tol = 1e-10;
  double rank_tol = 1e-8;
  int max_newton = 8;
  int max_halvings = 12;
};

struct DeformResult {
  Witness witness;
  /// residual after the corrector at every accepted parameter value
  std::vector<double> step_residuals;
  std::vector<double> step_params;
  std::vector<ConcreteClass> final_classes;
  int centralizer_dim = 0;  // of the endpoint
};

/// Target classes reached by deforming `source` to `target`. A form of the
/// target either has the same slots and multiplicities as the source, or it is
/// the diagonal form corresponding to a Jordan form of the source: every source
/// slot with blocks b_1 >= b_2 >= ... contributes b_1 consecutive target
/// entries with multiplicities given by the dual partition. In that case the
/// i-th entry from the end of every block moves to target entry i of its slot.
std::vector<ConcreteClass> deformation_targets(std::span<const ConcreteClass> source, const Spectrum& target);

/// Throws CentralizerNontrivial, SpectrumInvalid, InvalidTarget (the straight
/// path would leave the constraint surface, or the target does not fit the
/// source) and ContinuationStuck.
DeformResult deform_tuple(const Witness& w, std::span<const ConcreteClass> source, const Spectrum& target,
                          const DeformOptions& options = {});

}  // namespace dsp
