#include "dsp/deform.hpp"

#include "dsp/error.hpp"

#include <Eigen/QR>

#include <cmath>
#include <numbers>

namespace dsp {

namespace {

// Straight path of one class: the diagonal of its normal form moves from
// `start` to `start + delta`, the superdiagonal stays fixed.
struct ClassPath {
  Mode mode;
  std::vector<Rational> start;  // per diagonal position
  std::vector<Rational> delta;
  std::vector<bool> superdiag;  // position i carries a 1 at (i, i + 1)

  CMat at(const Rational& s) const {
    const auto n = static_cast<Eigen::Index>(start.size());
    CMat g = CMat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = to_double(start[static_cast<std::size_t>(i)] + s * delta[static_cast<std::size_t>(i)]);
      g(i, i) = mode == Mode::additive ? cd(v, 0.0) : std::polar(1.0, 2.0 * std::numbers::pi * v);
      if (superdiag[static_cast<std::size_t>(i)]) g(i, i + 1) = 1.0;
    }
    return g;
  }
};

// For every diagonal position of the source normal form, the index of the
// target entry it moves to; empty when the target form does not fit.
std::vector<std::size_t> position_targets(const ConcreteClass& c, const std::vector<SpectrumEntry>& target,
                                          bool& split) {
  const auto& slots = c.jnf.slots();
  std::vector<std::size_t> out;
  split = false;
  bool same = target.size() == slots.size();
  for (std::size_t k = 0; same && k < slots.size(); ++k) same = target[k].mult == c.jnf.multiplicity(k);
  if (same) {
    for (std::size_t k = 0; k < slots.size(); ++k) out.insert(out.end(), static_cast<std::size_t>(c.jnf.multiplicity(k)), k);
    return out;
  }
  std::size_t offset = 0;
  for (const auto& slot : slots) {
    const auto dual = dual_partition(slot.blocks).parts();
    for (std::size_t level = 0; level < dual.size(); ++level) {
      if (offset + level >= target.size() || target[offset + level].mult != dual[level]) return {};
    }
    for (int b : slot.blocks.parts()) {
      for (int i = 0; i < b; ++i) out.push_back(offset + static_cast<std::size_t>(b - 1 - i));
    }
    offset += dual.size();
  }
  if (offset != target.size()) return {};
  split = true;
  return out;
}

std::vector<ClassPath> build_paths(std::span<const ConcreteClass> source, const Spectrum& target,
                                   std::vector<ConcreteClass>& final_classes) {
  if (target.forms().size() != source.size() || target.n() != source.front().n() ||
      target.mode() != source.front().mode) {
    throw Error(ErrorKind::InvalidTarget, "target spectrum does not match the source classes");
  }
  const Mode mode = target.mode();
  std::vector<ClassPath> paths;
  Rational drift = 0;
  for (std::size_t j = 0; j < source.size(); ++j) {
    const auto& c = source[j];
    const auto& entries = target.forms()[j];
    bool split = false;
    const auto where = position_targets(c, entries, split);
    if (where.empty()) {
      throw Error(ErrorKind::InvalidTarget, "form " + std::to_string(j) + " of the target does not fit the source class");
    }
    ClassPath path{mode, {}, {}, {}};
    std::size_t pos = 0;
    for (std::size_t k = 0; k < c.jnf.slots().size(); ++k) {
      for (int b : c.jnf.slots()[k].blocks.parts()) {
        for (int i = 0; i < b; ++i, ++pos) {
          const Rational& a = c.values[k];
          const Rational& t = entries[where[pos]].value;
          Rational step = t - a;
          if (mode == Mode::multiplicative) step = frac(step + Rational(1, 2)) - Rational(1, 2);
          path.start.push_back(a);
          path.delta.push_back(step);
          path.superdiag.push_back(i + 1 < b);
          drift += step;
        }
      }
    }
    paths.push_back(std::move(path));

    std::vector<Rational> values;
    for (const auto& e : entries) values.push_back(e.value);
    if (split) {
      std::vector<EigenSlot> slots;
      for (std::size_t k = 0; k < entries.size(); ++k) {
        slots.push_back({"e" + std::to_string(k + 1),
                         Partition(std::vector<int>(static_cast<std::size_t>(entries[k].mult), 1))});
      }
      final_classes.emplace_back(mode, JordanForm(c.n(), std::move(slots)), std::move(values));
    } else {
      final_classes.emplace_back(mode, c.jnf, std::move(values));
    }
  }
  if (drift != 0) {
    throw Error(ErrorKind::InvalidTarget,
                "the straight eigenvalue path changes the weighted total by " + to_string(drift));
  }
  return paths;
}

double correct(Mode mode, std::vector<CMat>& frames, const std::vector<CMat>& forms, const DeformOptions& options) {
  return polish_frames(mode, frames, forms, options.max_newton, 1e-3 * options.tol);
}

std::vector<CMat> starting_frames(const Witness& w, std::span<const ConcreteClass> source) {
  bool usable = w.frames.size() == source.size();
  for (std::size_t j = 0; usable && j < source.size(); ++j) {
    const CMat& q = w.frames[j];
    if (q.rows() != w.n()) {
      usable = false;
      break;
    }
    const CMat m = q * source[j].normal_form() * q.partialPivLu().inverse();
    usable = (m - w.matrices[j]).norm() <= 1e-8 * (1.0 + w.matrices[j].norm());
  }
  if (usable) return w.frames;
  return frames_from_eigenvectors(w, source);
}

}  // namespace

std::vector<ConcreteClass> deformation_targets(std::span<const ConcreteClass> source, const Spectrum& target) {
  std::vector<ConcreteClass> out;
  build_paths(source, target, out);
  return out;
}

DeformResult deform_tuple(const Witness& w, std::span<const ConcreteClass> source, const Spectrum& target,
                          const DeformOptions& options) {
  if (w.matrices.size() != source.size() || source.empty()) {
    throw Error(ErrorKind::SizeMismatch, "witness and source classes differ in length");
  }
  if (options.steps < 1) throw Error(ErrorKind::InvalidInput, "steps must be positive");
  if (eigen_constraint_defect(target) != 0) {
    throw Error(ErrorKind::SpectrumInvalid, "target violates the eigenvalue constraint");
  }
  const int cdim = centralizer_dimension(w.matrices, options.rank_tol);
  if (cdim != 1) {
    throw Error(ErrorKind::CentralizerNontrivial, "centralizer has dimension " + std::to_string(cdim));
  }

  DeformResult result;
  const auto paths = build_paths(source, target, result.final_classes);
  const Mode mode = target.mode();
  auto forms_at = [&](const Rational& s) {
    std::vector<CMat> forms;
    for (const auto& p : paths) forms.push_back(p.at(s));
    return forms;
  };

  std::vector<CMat> frames = starting_frames(w, source);
  Rational s = 0;
  double res = correct(mode, frames, forms_at(s), options);
  if (res >= options.tol) throw Error(ErrorKind::ContinuationStuck, "starting tuple does not satisfy the relation");
  result.step_params.push_back(0.0);
  result.step_residuals.push_back(res);

  const Rational base(1, options.steps);
  Rational h = base;
  int halvings = 0;
  while (s < 1) {
    const Rational next = s + h > 1 ? Rational(1) : s + h;
    std::vector<CMat> trial = frames;
    const double trial_res = correct(mode, trial, forms_at(next), options);
    if (trial_res < options.tol) {
      frames = std::move(trial);
      s = next;
      result.step_params.push_back(to_double(s));
      result.step_residuals.push_back(trial_res);
      halvings = 0;
      h = h * 2 > base ? base : Rational(h * 2);
      continue;
    }
    if (++halvings > options.max_halvings) {
      throw Error(ErrorKind::ContinuationStuck, "corrector failed near parameter " + to_string(s));
    }
    h /= 2;
  }

  const auto final_forms = forms_at(Rational(1));
  result.witness.mode = mode;
  result.witness.matrices = conjugate_frames(frames, final_forms);
  result.witness.frames = frames;
  for (std::size_t j = 0; j < frames.size(); ++j) {
    if (result.final_classes[j].jnf == source[j].jnf) continue;
    // the endpoint of a split is upper triangular; refer the frame to the diagonal form
    Witness single{mode, {result.witness.matrices[j]}, 0.0, {}};
    result.witness.frames[j] = frames_from_eigenvectors(single, std::span(&result.final_classes[j], 1)).front();
  }
  result.witness.residual = tuple_residual(mode, result.witness.matrices);
  result.centralizer_dim = centralizer_dimension(result.witness.matrices, options.rank_tol);
  return result;
}

}  // namespace dsp
