#include "dsp/witness.hpp"

#include "dsp/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

namespace dsp {

ConcreteClass::ConcreteClass(Mode mode_, JordanForm jnf_, std::vector<Rational> values_)
    : mode(mode_), jnf(std::move(jnf_)), values(std::move(values_)) {
  if (values.size() != jnf.slots().size()) {
    throw Error(ErrorKind::InvalidInput, "one eigenvalue per slot is required");
  }
  if (mode == Mode::multiplicative) {
    for (auto& v : values) v = frac(v);
  }
  for (std::size_t a = 0; a < values.size(); ++a) {
    for (std::size_t b = a + 1; b < values.size(); ++b) {
      if (values[a] == values[b]) throw Error(ErrorKind::InvalidInput, "distinct slots need distinct eigenvalues");
    }
  }
}

cd ConcreteClass::complex_value(std::size_t slot) const {
  const double v = to_double(values.at(slot));
  if (mode == Mode::additive) return {v, 0.0};
  return std::polar(1.0, 2.0 * std::numbers::pi * v);
}

CMat ConcreteClass::normal_form() const {
  const int n = jnf.n();
  CMat g = CMat::Zero(n, n);
  int pos = 0;
  for (std::size_t k = 0; k < jnf.slots().size(); ++k) {
    const cd lambda = complex_value(k);
    for (int b : jnf.slots()[k].blocks.parts()) {
      for (int i = 0; i < b; ++i) {
        g(pos + i, pos + i) = lambda;
        if (i + 1 < b) g(pos + i, pos + i + 1) = 1.0;
      }
      pos += b;
    }
  }
  return g;
}

std::vector<cd> ConcreteClass::power_sums(int kmax) const {
  std::vector<cd> out(static_cast<std::size_t>(kmax), cd(0.0));
  for (std::size_t k = 0; k < jnf.slots().size(); ++k) {
    const cd lambda = complex_value(k);
    const double mult = jnf.multiplicity(k);
    cd power = 1.0;
    for (int e = 1; e <= kmax; ++e) {
      power *= lambda;
      out[static_cast<std::size_t>(e - 1)] += mult * power;
    }
  }
  return out;
}

namespace {

// L_k(x) = prod_{j != k} (x - r_j) / (r_k - r_j). Once M is annihilated by a
// polynomial with roots r, tr L_k(M) is the algebraic multiplicity of r_k.
CMat lagrange_basis(const CMat& m, const std::vector<cd>& roots, std::size_t k) {
  const CMat id = CMat::Identity(m.rows(), m.cols());
  CMat out = id;
  for (std::size_t j = 0; j < roots.size(); ++j) {
    if (j != k) out = out * (m - roots[j] * id) / (roots[k] - roots[j]);
  }
  return out;
}

// L_k'(M)
CMat lagrange_derivative(const CMat& m, const std::vector<cd>& roots, std::size_t k) {
  const CMat id = CMat::Identity(m.rows(), m.cols());
  std::vector<CMat> factors;
  for (std::size_t j = 0; j < roots.size(); ++j) {
    if (j != k) factors.push_back((m - roots[j] * id) / (roots[k] - roots[j]));
  }
  CMat out = CMat::Zero(m.rows(), m.cols());
  std::size_t t = 0;
  for (std::size_t j = 0; j < roots.size(); ++j) {
    if (j == k) continue;
    CMat term = id / (roots[k] - roots[j]);
    for (std::size_t u = 0; u < factors.size(); ++u) {
      if (u != t) term = term * factors[u];
    }
    out += term;
    ++t;
  }
  return out;
}

}  // namespace

std::vector<ConcreteClass> classes_from_spectrum(const Spectrum& s) {
  const auto tuple = s.diagonal_classes();
  return classes_from(tuple, s);
}

std::vector<ConcreteClass> classes_from(const ClassTuple& t, const Spectrum& s) {
  if (t.forms().size() != s.forms().size() || t.n() != s.n() || t.mode() != s.mode()) {
    throw Error(ErrorKind::SizeMismatch, "class tuple and spectrum do not match");
  }
  std::vector<ConcreteClass> out;
  for (std::size_t j = 0; j < t.forms().size(); ++j) {
    const auto& form = t.forms()[j];
    const auto& entries = s.forms()[j];
    if (form.slots().size() != entries.size()) {
      throw Error(ErrorKind::SizeMismatch, "form " + std::to_string(j) + ": slot count differs from spectrum");
    }
    std::vector<Rational> values;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      if (form.multiplicity(k) != entries[k].mult) {
        throw Error(ErrorKind::SizeMismatch, "form " + std::to_string(j) + ": multiplicity mismatch");
      }
      values.push_back(entries[k].value);
    }
    out.emplace_back(t.mode(), form, std::move(values));
  }
  return out;
}

Spectrum spectrum_of(std::span<const ConcreteClass> classes) {
  if (classes.empty()) throw Error(ErrorKind::InvalidInput, "no classes");
  std::vector<std::vector<SpectrumEntry>> forms;
  for (const auto& c : classes) {
    std::vector<SpectrumEntry> form;
    for (std::size_t k = 0; k < c.values.size(); ++k) form.push_back({c.values[k], c.jnf.multiplicity(k)});
    forms.push_back(std::move(form));
  }
  return Spectrum(classes.front().mode, std::move(forms));
}

double tuple_residual(Mode mode, std::span<const CMat> matrices) {
  const auto n = matrices.front().rows();
  if (mode == Mode::additive) {
    CMat sum = CMat::Zero(n, n);
    for (const auto& m : matrices) sum += m;
    return sum.norm();
  }
  CMat prod = CMat::Identity(n, n);
  for (const auto& m : matrices) prod = prod * m;
  return (prod - CMat::Identity(n, n)).norm();
}

double class_residual(const CMat& m, const ConcreteClass& c) {
  const auto n = m.rows();
  std::vector<cd> roots;
  for (std::size_t k = 0; k < c.values.size(); ++k) roots.push_back(c.complex_value(k));
  double acc = 0.0;
  for (std::size_t k = 0; k < roots.size(); ++k) {
    acc += std::norm(lagrange_basis(m, roots, k).trace() - static_cast<double>(c.jnf.multiplicity(k)));
  }
  CMat annihilator = CMat::Identity(n, n);
  const CMat id = CMat::Identity(n, n);
  for (std::size_t k = 0; k < c.values.size(); ++k) {
    const CMat factor = m - c.complex_value(k) * id;
    for (int e = 0; e < c.jnf.slots()[k].blocks.largest(); ++e) annihilator = annihilator * factor;
  }
  acc += annihilator.squaredNorm();
  return std::sqrt(acc);
}

int SearchReport::converged_count() const {
  return static_cast<int>(std::count_if(restarts.begin(), restarts.end(), [](const auto& r) { return r.converged; }));
}

int SearchReport::irreducible_count(int n) const {
  return static_cast<int>(std::count_if(restarts.begin(), restarts.end(), [n](const auto& r) {
    return r.converged && r.diagnostics && r.diagnostics->irreducible(n);
  }));
}

namespace {

// Assigns each computed eigenvalue to a slot of `c`, respecting multiplicities,
// greedily by distance. Returns slot index per eigenvalue.
std::vector<std::size_t> assign_to_slots(const Eigen::VectorXcd& eig, const ConcreteClass& c) {
  struct Pair {
    double dist;
    Eigen::Index i;
    std::size_t slot;
  };
  std::vector<Pair> pairs;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    for (std::size_t k = 0; k < c.values.size(); ++k) pairs.push_back({std::abs(eig(i) - c.complex_value(k)), i, k});
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.dist < b.dist; });
  std::vector<int> capacity;
  for (std::size_t k = 0; k < c.values.size(); ++k) capacity.push_back(c.jnf.multiplicity(k));
  std::vector<std::size_t> slot_of(static_cast<std::size_t>(eig.size()), c.values.size());
  for (const auto& p : pairs) {
    auto& assigned = slot_of[static_cast<std::size_t>(p.i)];
    if (assigned != c.values.size() || capacity[p.slot] == 0) continue;
    assigned = p.slot;
    --capacity[p.slot];
  }
  return slot_of;
}

// Eigenvector frame of a (numerically) diagonalizable matrix with columns
// ordered like the slots of the normal form of `c`.
CMat slot_ordered_frame(const CMat& m, const ConcreteClass& c) {
  Eigen::ComplexEigenSolver<CMat> es(m);
  const auto slot_of = assign_to_slots(es.eigenvalues(), c);
  CMat frame(m.rows(), m.cols());
  Eigen::Index col = 0;
  for (std::size_t k = 0; k < c.values.size(); ++k) {
    for (std::size_t i = 0; i < slot_of.size(); ++i) {
      if (slot_of[i] == k) frame.col(col++) = es.eigenvectors().col(static_cast<Eigen::Index>(i));
    }
  }
  return frame;
}

struct Problem {
  Mode mode;
  int n;
  std::vector<CMat> normal_forms;  // parametrized classes, in product order
  std::vector<cd> roots;           // distinct eigenvalues of the free matrix
  std::vector<double> mults;       // algebraic multiplicities of the roots
  // column counts of the eigenspaces of each parametrized class; empty when
  // the class is not diagonalizable
  std::vector<std::vector<int>> eigenspaces;
};

// Q and Q C give the same matrix for every C commuting with the normal form.
// Orthonormal columns inside each eigenspace remove that freedom, so the
// condition number of the frame only reflects the angles between eigenspaces.
void fix_gauge(CMat& q, const std::vector<int>& eigenspaces) {
  if (eigenspaces.empty()) {
    q *= std::sqrt(static_cast<double>(q.rows())) / q.norm();
    return;
  }
  Eigen::Index col = 0;
  for (int m : eigenspaces) {
    Eigen::HouseholderQR<CMat> qr(q.middleCols(col, m));
    q.middleCols(col, m) = qr.householderQ() * CMat::Identity(q.rows(), m);
    col += m;
  }
}

struct State {
  std::vector<CMat> frames;
  std::vector<CMat> mats;
  CMat free;  // the matrix fixed by the relation
};

void refresh(const Problem& pr, State& st) {
  const auto p = pr.normal_forms.size();
  st.mats.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    Eigen::PartialPivLU<CMat> lu(st.frames[j]);
    st.mats[j] = st.frames[j] * pr.normal_forms[j] * lu.inverse();
  }
  if (pr.mode == Mode::additive) {
    st.free = CMat::Zero(pr.n, pr.n);
    for (const auto& m : st.mats) st.free -= m;
  } else {
    CMat prod = CMat::Identity(pr.n, pr.n);
    for (const auto& m : st.mats) prod = prod * m;
    st.free = prod.partialPivLu().inverse();
  }
}

CVec residual(const Problem& pr, const CMat& b) {
  const int n = pr.n;
  const auto s = static_cast<int>(pr.roots.size());
  CVec r(s + n * n);
  for (int k = 0; k < s; ++k) {
    r(k) = lagrange_basis(b, pr.roots, static_cast<std::size_t>(k)).trace() - pr.mults[static_cast<std::size_t>(k)];
  }
  CMat annihilator = CMat::Identity(n, n);
  for (const cd& s : pr.roots) annihilator = annihilator * (b - s * CMat::Identity(n, n));
  r.tail(n * n) = Eigen::Map<const CVec>(annihilator.data(), n * n);
  return r;
}

// Derivative of the residual with respect to E_j(a, b), where the frames move
// as Q_j -> (I + E_j) Q_j and hence M_j -> M_j + [E_j, M_j]. Every such
// perturbation moves the free matrix by a rank-two term
// dB = -X1[:, a] Y1[b, :] + X2[:, a] Y2[b, :].
CMat jacobian(const Problem& pr, const State& st) {
  const int n = pr.n;
  const int nn = n * n;
  const auto p = static_cast<int>(pr.normal_forms.size());
  const CMat id = CMat::Identity(n, n);
  const CMat& bm = st.free;
  const auto r = pr.roots.size();
  const auto s = static_cast<int>(r);
  CMat jac = CMat::Zero(s + nn, p * nn);

  std::vector<CMat> grads;
  for (std::size_t k = 0; k < r; ++k) grads.push_back(lagrange_derivative(bm, pr.roots, k));

  std::vector<CMat> prefix(r + 1), suffix(r + 1);
  prefix[0] = id;
  for (std::size_t i = 0; i < r; ++i) prefix[i + 1] = prefix[i] * (bm - pr.roots[i] * id);
  suffix[r] = id;
  for (std::size_t i = r; i-- > 0;) suffix[i] = (bm - pr.roots[i] * id) * suffix[i + 1];

  // products M_0..M_{j-1} and M_{j+1}..M_{p-1}
  std::vector<CMat> left(static_cast<std::size_t>(p) + 1), right(static_cast<std::size_t>(p) + 1);
  left[0] = id;
  for (int j = 0; j < p; ++j) left[static_cast<std::size_t>(j + 1)] = left[static_cast<std::size_t>(j)] * st.mats[static_cast<std::size_t>(j)];
  right[static_cast<std::size_t>(p)] = id;
  for (int j = p; j-- > 0;) right[static_cast<std::size_t>(j)] = st.mats[static_cast<std::size_t>(j)] * right[static_cast<std::size_t>(j + 1)];

  for (int j = 0; j < p; ++j) {
    const CMat& m = st.mats[static_cast<std::size_t>(j)];
    CMat x1, y1, x2, y2;
    if (pr.mode == Mode::additive) {
      x1 = id;
      y1 = m;
      x2 = m;
      y2 = id;
    } else {
      const CMat& l = left[static_cast<std::size_t>(j)];
      const CMat& rr = right[static_cast<std::size_t>(j + 1)];
      x1 = bm * l;
      y1 = m * rr * bm;
      x2 = x1 * m;
      y2 = rr * bm;
    }
    const int col0 = j * nn;
    for (int k = 0; k < s; ++k) {
      const CMat& t = grads[static_cast<std::size_t>(k)];
      const CMat z1 = y1 * t * x1;
      const CMat z2 = y2 * t * x2;
      for (int b = 0; b < n; ++b) {
        for (int a = 0; a < n; ++a) jac(k, col0 + a + b * n) = -z1(b, a) + z2(b, a);
      }
    }
    for (std::size_t i = 0; i < r; ++i) {
      const CMat u1 = prefix[i] * x1;
      const CMat v1 = y1 * suffix[i + 1];
      const CMat u2 = prefix[i] * x2;
      const CMat v2 = y2 * suffix[i + 1];
      for (int b = 0; b < n; ++b) {
        for (int a = 0; a < n; ++a) {
          Eigen::Map<CMat> blk(jac.col(col0 + a + b * n).data() + s, n, n);
          blk.noalias() -= u1.col(a) * v1.row(b);
          blk.noalias() += u2.col(a) * v2.row(b);
        }
      }
    }
  }
  return jac;
}

struct LocalResult {
  State state;
  double defect = 0.0;
  int iterations = 0;
  bool abandoned = false;  // frames degenerated or progress stalled
};

double worst_condition(const State& st) {
  double worst = 0.0;
  for (const auto& f : st.frames) worst = std::max(worst, condition_number(f));
  return worst;
}

// Frames whose condition number grows by this factor are heading for the
// boundary of their class.
constexpr double kFrameGrowth = 30.0;
// An attempt is abandoned when the squared defect drops by less than 10%
// over a window of iterations.
constexpr int kStallWindow = 50;
constexpr double kStallRatio = 0.9;
// Near-solutions are finished by Newton steps on all frames.
constexpr double kPolishBelow = 1e-6;
constexpr int kPolishSteps = 8;

LocalResult levenberg_marquardt(const Problem& pr, State st, int max_iterations, double target) {
  const int n = pr.n;
  const int nn = n * n;
  for (std::size_t j = 0; j < st.frames.size(); ++j) fix_gauge(st.frames[j], pr.eigenspaces[j]);
  refresh(pr, st);
  const double max_condition = kFrameGrowth * worst_condition(st);
  double checkpoint = std::numeric_limits<double>::infinity();
  CVec r = residual(pr, st.free);
  double cost = r.squaredNorm();
  double lambda = -1.0;
  int it = 0;
  for (; it < max_iterations; ++it) {
    if (std::sqrt(cost) <= target) break;
    if (it > 0 && it % kStallWindow == 0) {
      if (cost > kStallRatio * checkpoint) return {std::move(st), std::sqrt(cost), it, true};
      checkpoint = cost;
    }
    const CMat jac = jacobian(pr, st);
    const CMat gram = jac * jac.adjoint();
    if (lambda < 0.0) lambda = 1e-3 * gram.trace().real() / static_cast<double>(gram.rows());
    const double floor_lambda = 1e-14 * gram.trace().real() / static_cast<double>(gram.rows());
    bool accepted = false;
    while (!accepted && it < max_iterations) {
      CMat damped = gram;
      damped.diagonal().array() += lambda;
      const CVec y = damped.llt().solve(r);
      const CVec delta = -jac.adjoint() * y;
      State trial = st;
      for (std::size_t j = 0; j < trial.frames.size(); ++j) {
        const Eigen::Map<const CMat> e(delta.data() + static_cast<Eigen::Index>(j) * nn, n, n);
        trial.frames[j] = (CMat::Identity(n, n) + e) * trial.frames[j];
        fix_gauge(trial.frames[j], pr.eigenspaces[j]);
      }
      refresh(pr, trial);
      const CVec r_trial = residual(pr, trial.free);
      const double trial_cost = r_trial.squaredNorm();
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        st = std::move(trial);
        r = r_trial;
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, floor_lambda);
        accepted = true;
        if (std::sqrt(cost) > target && worst_condition(st) > max_condition) {
          return {std::move(st), std::sqrt(cost), it + 1, true};
        }
      } else {
        lambda *= 4.0;
        ++it;
        if (lambda > 1e12 * gram.trace().real()) return {std::move(st), std::sqrt(cost), it, false};
      }
    }
  }
  return {std::move(st), std::sqrt(cost), it, false};
}

CMat relation_defect(Mode mode, const std::vector<CMat>& mats) {
  const auto n = mats.front().rows();
  if (mode == Mode::additive) {
    CMat sum = CMat::Zero(n, n);
    for (const auto& m : mats) sum += m;
    return sum;
  }
  CMat prod = CMat::Identity(n, n);
  for (const auto& m : mats) prod = prod * m;
  return prod - CMat::Identity(n, n);
}

// Derivative of the relation defect with respect to E_j(a, b) where
// Q_j -> (I + E_j) Q_j, so that M_j -> M_j + [E_j, M_j].
CMat defect_jacobian(Mode mode, const std::vector<CMat>& mats) {
  const auto n = mats.front().rows();
  const auto nn = n * n;
  const auto count = static_cast<Eigen::Index>(mats.size());
  const CMat id = CMat::Identity(n, n);
  CMat jac(nn, count * nn);
  std::vector<CMat> left(mats.size() + 1), right(mats.size() + 1);
  left[0] = id;
  right[mats.size()] = id;
  for (std::size_t j = 0; j < mats.size(); ++j) {
    left[j + 1] = mode == Mode::additive ? id : CMat(left[j] * mats[j]);
  }
  for (std::size_t j = mats.size(); j-- > 0;) {
    right[j] = mode == Mode::additive ? id : CMat(mats[j] * right[j + 1]);
  }
  for (Eigen::Index j = 0; j < count; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const CMat& l = left[ju];
    const CMat& r = right[ju + 1];
    const CMat lm = l * mats[ju];
    const CMat mr = mats[ju] * r;
    for (Eigen::Index b = 0; b < n; ++b) {
      for (Eigen::Index a = 0; a < n; ++a) {
        Eigen::Map<CMat> blk(jac.col(j * nn + a + b * n).data(), n, n);
        blk.noalias() = l.col(a) * mr.row(b);
        blk.noalias() -= lm.col(a) * r.row(b);
      }
    }
  }
  return jac;
}

struct Layout {
  std::vector<std::size_t> order;  // product order; the last entry is the free class
};

// One layout per diagonalizable class, starting from the last one.
std::vector<Layout> choose_layouts(std::span<const ConcreteClass> classes) {
  const std::size_t count = classes.size();
  std::vector<Layout> out;
  for (std::size_t free = count; free-- > 0;) {
    if (!classes[free].jnf.is_diagonal()) continue;
    Layout l;
    // cyclic rotation keeps the product relation equivalent
    for (std::size_t i = 1; i <= count; ++i) l.order.push_back((free + i) % count);
    out.push_back(std::move(l));
  }
  if (out.empty()) throw Error(ErrorKind::InvalidInput, "search needs at least one diagonalizable class");
  return out;
}

Problem make_problem(std::span<const ConcreteClass> classes, const Layout& layout) {
  Problem pr{classes.front().mode, classes.front().n(), {}, {}, {}};
  for (std::size_t i = 0; i + 1 < layout.order.size(); ++i) {
    const auto& c = classes[layout.order[i]];
    pr.normal_forms.push_back(c.normal_form());
    pr.eigenspaces.emplace_back();
    if (c.jnf.is_diagonal()) {
      for (std::size_t k = 0; k < c.values.size(); ++k) pr.eigenspaces.back().push_back(c.jnf.multiplicity(k));
    }
  }
  const auto& free_class = classes[layout.order.back()];
  for (std::size_t k = 0; k < free_class.values.size(); ++k) {
    pr.roots.push_back(free_class.complex_value(k));
    pr.mults.push_back(free_class.jnf.multiplicity(k));
  }
  return pr;
}

RestartOutcome run_restart(std::span<const ConcreteClass> classes, const std::vector<Layout>& layouts,
                           const std::vector<Problem>& problems, const SearchOptions& options, int index) {
  auto rng = derived_rng(options.seed, static_cast<std::uint64_t>(index));
  const double target = 1e-2 * options.tol;
  RestartOutcome out;
  out.index = index;
  std::optional<LocalResult> kept;
  std::size_t kept_layout = 0;
  for (std::size_t a = 0; out.iterations < options.budget.iterations; ++a) {
    const std::size_t k = (static_cast<std::size_t>(index) + a) % layouts.size();
    const Problem& pr = problems[k];
    State st;
    for (std::size_t j = 0; j < pr.normal_forms.size(); ++j) st.frames.push_back(random_frame(pr.n, rng));
    auto local = levenberg_marquardt(pr, std::move(st), options.budget.iterations - out.iterations, target);
    out.iterations += std::max(local.iterations, 1);
    ++out.attempts;
    const bool done = local.defect <= target;
    if (!kept || local.defect < kept->defect) {
      kept = std::move(local);
      kept_layout = k;
    }
    if (done) break;
  }
  const Layout& layout = layouts[kept_layout];
  LocalResult& local = *kept;
  out.objective = local.defect;
  const std::size_t free = layout.order.back();
  out.free_class = static_cast<int>(free);
  const auto& free_class = classes[free];
  if (!local.state.free.allFinite()) {
    out.residual = std::numeric_limits<double>::infinity();
    return out;
  }

  // Project the free matrix onto its class through its eigen-decomposition.
  const CMat frame = slot_ordered_frame(local.state.free, free_class);
  const CMat projected = frame * free_class.normal_form() * frame.partialPivLu().inverse();

  Witness w;
  w.mode = free_class.mode;
  w.matrices.resize(classes.size());
  w.frames.resize(classes.size());
  for (std::size_t i = 0; i + 1 < layout.order.size(); ++i) {
    w.matrices[layout.order[i]] = local.state.mats[i];
    w.frames[layout.order[i]] = local.state.frames[i];
  }
  w.matrices[free] = projected;
  w.frames[free] = frame;
  w.residual = tuple_residual(w.mode, w.matrices);
  // projection error grows with the conditioning of the frames
  if (w.residual > target && local.defect < kPolishBelow) {
    std::vector<CMat> forms;
    for (const auto& c : classes) forms.push_back(c.normal_form());
    polish_frames(w.mode, w.frames, forms, kPolishSteps, 1e-3 * options.tol);
    w.matrices = conjugate_frames(w.frames, forms);
    w.residual = tuple_residual(w.mode, w.matrices);
  }
  out.residual = std::isfinite(w.residual) ? w.residual : std::numeric_limits<double>::infinity();
  out.converged = out.residual < options.tol;
  if (out.converged) {
    if (options.diagnose) out.diagnostics = verify_witness(w, classes, options.rank_tol);
    out.witness = std::move(w);
  }
  return out;
}

}  // namespace

std::vector<CMat> conjugate_frames(const std::vector<CMat>& frames, const std::vector<CMat>& forms) {
  std::vector<CMat> mats;
  for (std::size_t j = 0; j < frames.size(); ++j) {
    mats.push_back(frames[j] * forms[j] * frames[j].partialPivLu().inverse());
  }
  return mats;
}

double polish_frames(Mode mode, std::vector<CMat>& frames, const std::vector<CMat>& forms, int max_newton,
                     double target) {
  constexpr int kMaxHalvings = 8;
  const auto n = frames.front().rows();
  auto mats = conjugate_frames(frames, forms);
  double res = relation_defect(mode, mats).norm();
  for (int it = 0; it < max_newton && res > target; ++it) {
    const CMat f = relation_defect(mode, mats);
    const CMat jac = defect_jacobian(mode, mats);
    Eigen::CompleteOrthogonalDecomposition<CMat> cod(jac);
    cod.setThreshold(1e-10);
    const CVec rhs = -Eigen::Map<const CVec>(f.data(), f.size());
    const CVec step = cod.solve(rhs);
    bool improved = false;
    double scale = 1.0;
    for (int halving = 0; halving <= kMaxHalvings && !improved; ++halving, scale *= 0.5) {
      std::vector<CMat> trial = frames;
      for (std::size_t j = 0; j < trial.size(); ++j) {
        const Eigen::Map<const CMat> e(step.data() + static_cast<Eigen::Index>(j) * n * n, n, n);
        trial[j] = (CMat::Identity(n, n) + scale * e) * trial[j];
        trial[j] *= std::sqrt(static_cast<double>(n)) / trial[j].norm();
      }
      auto trial_mats = conjugate_frames(trial, forms);
      const double trial_res = relation_defect(mode, trial_mats).norm();
      if (std::isfinite(trial_res) && trial_res < res) {
        frames = std::move(trial);
        mats = std::move(trial_mats);
        res = trial_res;
        improved = true;
      }
    }
    if (!improved) break;
  }
  return res;
}


SearchReport search_tuple(std::span<const ConcreteClass> classes, const SearchOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  if (classes.size() < 2) throw Error(ErrorKind::InvalidInput, "need at least two classes");
  const int n = classes.front().n();
  for (const auto& c : classes) {
    if (c.n() != n) throw Error(ErrorKind::SizeMismatch, "classes of different sizes");
  }
  if (n > 12) throw Error(ErrorKind::InvalidInput, "search is limited to n <= 12");
  {
    const auto s = spectrum_of(classes);
    const Rational defect = eigen_constraint_defect(s);
    if (defect != 0) throw Error(ErrorKind::SpectrumInvalid, "eigenvalue constraint defect " + to_string(defect));
  }

  const auto layouts = choose_layouts(classes);
  std::vector<Problem> problems;
  for (const auto& l : layouts) problems.push_back(make_problem(classes, l));

  SearchReport report;
  report.seed = options.seed;
  report.budget = options.budget;
  report.tol = options.tol;
  report.restarts.resize(static_cast<std::size_t>(std::max(0, options.budget.restarts)));

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < options.budget.restarts; i = next++) {
      report.restarts[static_cast<std::size_t>(i)] = run_restart(classes, layouts, problems, options, i);
    }
  };
  const int threads = std::clamp(options.threads, 1, std::max(1, options.budget.restarts));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  report.best_residual = std::numeric_limits<double>::infinity();
  for (const auto& r : report.restarts) report.best_residual = std::min(report.best_residual, r.residual);
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

namespace {

using Counts = std::vector<std::vector<int>>;

bool split_blocks(const Spectrum& full, Counts remaining, int block_size, std::vector<Counts>& blocks,
                  std::uint64_t cap) {
  int left = 0;
  for (int c : remaining.front()) left += c;
  if (left == block_size) {
    blocks.push_back(remaining);
    return true;
  }
  // sub-spectrum of the remaining eigenvalues, with an index map back
  std::vector<std::vector<SpectrumEntry>> forms;
  std::vector<std::vector<std::size_t>> index;
  for (std::size_t j = 0; j < remaining.size(); ++j) {
    forms.emplace_back();
    index.emplace_back();
    for (std::size_t i = 0; i < remaining[j].size(); ++i) {
      if (remaining[j][i] == 0) continue;
      forms.back().push_back({full.forms()[j][i].value, remaining[j][i]});
      index.back().push_back(i);
    }
  }
  const Spectrum sub(full.mode(), std::move(forms));
  bool done = false;
  visit_relations(sub, block_size, cap, [&](const Relation& rel) {
    Counts block(remaining.size());
    Counts rest = remaining;
    for (std::size_t j = 0; j < remaining.size(); ++j) {
      block[j].assign(remaining[j].size(), 0);
      for (std::size_t i = 0; i < index[j].size(); ++i) {
        block[j][index[j][i]] = rel.chosen[j][i];
        rest[j][index[j][i]] -= rel.chosen[j][i];
      }
    }
    blocks.push_back(block);
    if (split_blocks(full, rest, block_size, blocks, cap)) {
      done = true;
      return false;
    }
    blocks.pop_back();
    return true;
  });
  return done;
}

}  // namespace

Witness build_block_diagonal_witness(std::span<const ConcreteClass> classes, int block_size,
                                     const SearchOptions& options) {
  if (classes.size() < 2) throw Error(ErrorKind::InvalidInput, "need at least two classes");
  const int n = classes.front().n();
  for (const auto& c : classes) {
    if (!c.jnf.is_diagonal()) throw Error(ErrorKind::BlockSplitImpossible, "block splitting needs diagonalizable classes");
  }
  if (block_size < 1 || n % block_size != 0) {
    throw Error(ErrorKind::BlockSplitImpossible, "block size must divide n");
  }
  const Spectrum full = spectrum_of(classes);
  if (eigen_constraint_defect(full) != 0) throw Error(ErrorKind::SpectrumInvalid, "eigenvalue constraint violated");

  Counts all(full.forms().size());
  for (std::size_t j = 0; j < all.size(); ++j) {
    for (const auto& e : full.forms()[j]) all[j].push_back(e.mult);
  }
  std::vector<Counts> blocks;
  if (!split_blocks(full, all, block_size, blocks, kDefaultRelationCap)) {
    throw Error(ErrorKind::BlockSplitImpossible,
                "no split into blocks of size " + std::to_string(block_size) + " satisfying the constraint");
  }

  Witness w;
  w.mode = full.mode();
  const std::size_t count = classes.size();
  w.matrices.assign(count, CMat::Zero(n, n));
  w.frames.assign(count, CMat::Zero(n, n));
  // next free normal-form column for every (class, slot)
  std::vector<std::vector<int>> next_col(count);
  for (std::size_t j = 0; j < count; ++j) {
    int offset = 0;
    for (std::size_t k = 0; k < classes[j].values.size(); ++k) {
      next_col[j].push_back(offset);
      offset += classes[j].jnf.multiplicity(k);
    }
  }

  for (std::size_t b = 0; b < blocks.size(); ++b) {
    std::vector<ConcreteClass> sub;
    std::vector<std::vector<std::size_t>> slot_map(count);
    for (std::size_t j = 0; j < count; ++j) {
      std::vector<int> mv;
      std::vector<Rational> values;
      for (std::size_t k = 0; k < blocks[b][j].size(); ++k) {
        if (blocks[b][j][k] == 0) continue;
        mv.push_back(blocks[b][j][k]);
        values.push_back(classes[j].values[k]);
        slot_map[j].push_back(k);
      }
      std::vector<EigenSlot> slots;
      for (std::size_t k = 0; k < mv.size(); ++k) {
        slots.push_back({"e" + std::to_string(k + 1), Partition(std::vector<int>(static_cast<std::size_t>(mv[k]), 1))});
      }
      sub.emplace_back(full.mode(), JordanForm(block_size, std::move(slots)), std::move(values));
    }
    SearchOptions sub_options = options;
    sub_options.seed = options.seed + 0x9e3779b97f4a7c15ULL * (b + 1);
    sub_options.diagnose = false;
    const auto report = search_tuple(sub, sub_options);
    const auto it = std::find_if(report.restarts.begin(), report.restarts.end(),
                                 [](const RestartOutcome& r) { return r.converged; });
    if (it == report.restarts.end()) {
      throw Error(ErrorKind::NoConvergence, "block " + std::to_string(b) + " did not converge");
    }
    const auto& part = *it->witness;
    const auto off = static_cast<Eigen::Index>(b) * block_size;
    for (std::size_t j = 0; j < count; ++j) {
      w.matrices[j].block(off, off, block_size, block_size) = part.matrices[j];
      // place the block's frame columns at the matching normal-form positions
      Eigen::Index sub_col = 0;
      for (std::size_t s = 0; s < slot_map[j].size(); ++s) {
        const std::size_t k = slot_map[j][s];
        for (int c = 0; c < sub[j].jnf.multiplicity(s); ++c) {
          CVec column = CVec::Zero(n);
          column.segment(off, block_size) = part.frames[j].col(sub_col++);
          w.frames[j].col(next_col[j][k]++) = column;
        }
      }
    }
  }
  w.residual = tuple_residual(w.mode, w.matrices);
  return w;
}

Diagnostics verify_witness(const Witness& w, std::span<const ConcreteClass> classes, double rank_tol) {
  if (w.matrices.size() != classes.size()) {
    throw Error(ErrorKind::SizeMismatch, "witness has " + std::to_string(w.matrices.size()) + " matrices for " +
                                             std::to_string(classes.size()) + " classes");
  }
  const int n = w.n();
  for (std::size_t j = 0; j < classes.size(); ++j) {
    if (w.matrices[j].rows() != n || w.matrices[j].cols() != n || classes[j].n() != n) {
      throw Error(ErrorKind::SizeMismatch, "matrix " + std::to_string(j) + " does not match size " + std::to_string(n));
    }
  }
  Diagnostics d;
  d.residual = tuple_residual(w.mode, w.matrices);
  for (std::size_t j = 0; j < classes.size(); ++j) d.class_residuals.push_back(class_residual(w.matrices[j], classes[j]));
  d.burnside_dim = burnside_dimension(w.matrices, rank_tol);
  d.centralizer_dim = centralizer_dimension(w.matrices, rank_tol);
  d.invariant_subspace = find_invariant_subspace(w.matrices, rank_tol, 0);
  return d;
}

std::vector<CMat> frames_from_eigenvectors(const Witness& w, std::span<const ConcreteClass> classes) {
  if (w.matrices.size() != classes.size()) throw Error(ErrorKind::SizeMismatch, "witness/classes count mismatch");
  std::vector<CMat> frames;
  for (std::size_t j = 0; j < classes.size(); ++j) {
    if (!classes[j].jnf.is_diagonal()) {
      throw Error(ErrorKind::InvalidInput, "frames of non-diagonalizable class " + std::to_string(j) + " must be supplied");
    }
    frames.push_back(slot_ordered_frame(w.matrices[j], classes[j]));
  }
  return frames;
}

}  // namespace dsp
