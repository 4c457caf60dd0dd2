#include "dsp/error.hpp"
#include "dsp/witness.hpp"

#include <doctest.h>

using namespace dsp;

namespace {

std::vector<MultiplicityVector> mvs(const std::vector<std::vector<int>>& pmv) {
  std::vector<MultiplicityVector> out;
  for (const auto& mv : pmv) out.emplace_back(mv);
  return out;
}

std::vector<ConcreteClass> control_classes(Mode mode = Mode::multiplicative, std::uint64_t seed = 1) {
  return classes_from_spectrum(sample_spectrum(mvs({{1, 1}, {1, 1}, {1, 1}, {1, 1}}), mode, {}, seed));
}

std::vector<ConcreteClass> case_a_classes(std::uint64_t seed = 2) {
  return classes_from_spectrum(sample_spectrum(mvs({{2, 2}, {2, 2}, {2, 2}, {2, 2}}), Mode::multiplicative,
                                               {SampleTarget::Kind::relatively_generic, Rational(0)}, seed));
}

// Product or sum recomputed entry by entry.
double direct_residual(const Witness& w) {
  const int n = w.n();
  CMat acc = w.mode == Mode::additive ? CMat(CMat::Zero(n, n)) : CMat(CMat::Identity(n, n));
  for (const auto& m : w.matrices) {
    if (w.mode == Mode::additive) {
      acc += m;
    } else {
      CMat next = CMat::Zero(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) next(i, j) += acc(i, k) * m(k, j);
      acc = next;
    }
  }
  if (w.mode == Mode::multiplicative) acc -= CMat::Identity(n, n);
  return acc.norm();
}

const Witness& first_witness(const SearchReport& r) {
  for (const auto& o : r.restarts) {
    if (o.witness) return *o.witness;
  }
  FAIL("no converged restart");
  throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("concrete classes") {
  const JordanForm f(3, {{"a", Partition({2})}, {"b", Partition({1})}});
  CHECK_THROWS_AS(ConcreteClass(Mode::multiplicative, f, {Rational(1, 4), Rational(5, 4)}), Error);
  CHECK_THROWS_AS(ConcreteClass(Mode::multiplicative, f, {Rational(1, 4)}), Error);
  const ConcreteClass c(Mode::multiplicative, f, {Rational(1, 4), Rational(1, 2)});
  const CMat g = c.normal_form();
  CHECK(std::abs(g(0, 0) - cd(0, 1)) < 1e-15);
  CHECK(g(0, 1) == cd(1, 0));
  CHECK(std::abs(g(2, 2) - cd(-1, 0)) < 1e-15);
  CHECK(class_residual(g, c) < 1e-14);
  CHECK(class_residual(CMat::Identity(3, 3), c) > 1.0);
  // a diagonal matrix with the right eigenvalues is not in the Jordan class
  CMat diag = g;
  diag(0, 1) = 0.0;
  CHECK(class_residual(diag, c) < 1e-14);
  const auto ps = c.power_sums(2);
  CHECK(std::abs(ps[0] - (cd(0, 2) - 1.0)) < 1e-14);
}

TEST_CASE("positive control: generic n = 2 quadruple") {
  const auto classes = control_classes();
  SearchOptions opts;
  opts.seed = 11;
  const auto report = search_tuple(classes, opts);
  CHECK(report.restarts.size() == 50);
  CHECK(report.converged_count() >= 1);
  CHECK(report.irreducible_count(2) >= 1);
  for (const auto& o : report.restarts) {
    if (!o.converged) continue;
    REQUIRE(o.witness);
    REQUIRE(o.diagnostics);
    CHECK(o.residual < 1e-10);
    CHECK(direct_residual(*o.witness) < 1e-10);
    CHECK(o.diagnostics->burnside_dim == 4);
    CHECK(o.diagnostics->centralizer_dim == 1);
    CHECK_FALSE(o.diagnostics->invariant_subspace.has_value());
    for (double r : o.diagnostics->class_residuals) CHECK(r < 1e-8);
  }
}

TEST_CASE("additive positive control") {
  const auto classes = control_classes(Mode::additive, 4);
  SearchOptions opts;
  opts.seed = 3;
  opts.budget.restarts = 10;
  const auto report = search_tuple(classes, opts);
  REQUIRE(report.converged_count() >= 1);
  const Witness& w = first_witness(report);
  CHECK(direct_residual(w) < 1e-10);
  const auto d = verify_witness(w, classes);
  CHECK(d.centralizer_dim == 1);
  for (double r : d.class_residuals) CHECK(r < 1e-8);
}

TEST_CASE("search is deterministic and thread-count independent") {
  const auto classes = control_classes();
  SearchOptions opts;
  opts.seed = 5;
  opts.budget.restarts = 6;
  const auto a = search_tuple(classes, opts);
  const auto b = search_tuple(classes, opts);
  opts.threads = 3;
  const auto c = search_tuple(classes, opts);
  for (std::size_t i = 0; i < a.restarts.size(); ++i) {
    CHECK(a.restarts[i].residual == b.restarts[i].residual);
    CHECK(a.restarts[i].residual == c.restarts[i].residual);
    CHECK(a.restarts[i].iterations == c.restarts[i].iterations);
    if (a.restarts[i].witness) {
      for (std::size_t j = 0; j < 4; ++j) CHECK(a.restarts[i].witness->matrices[j] == c.restarts[i].witness->matrices[j]);
    }
  }
}

TEST_CASE("search rejects spectra violating the constraint") {
  const JordanForm f = JordanForm::diagonal(MultiplicityVector({1, 1}));
  std::vector<ConcreteClass> bad;
  for (int j = 0; j < 3; ++j) bad.emplace_back(Mode::multiplicative, f, std::vector<Rational>{Rational(0), Rational(1, 4)});
  CHECK_THROWS_WITH_AS(search_tuple(bad, {}), doctest::Contains("SpectrumInvalid"), Error);
}

TEST_CASE("a Jordan block class among the targets") {
  // (2) with one eigenvalue, three generic semisimple classes
  const Spectrum s = sample_spectrum(mvs({{2}, {1, 1}, {1, 1}, {1, 1}}), Mode::multiplicative, {}, 21);
  const ClassTuple t(Mode::multiplicative, 2,
                     {JordanForm(2, {{"a", Partition({2})}}), JordanForm::diagonal(MultiplicityVector({1, 1})),
                      JordanForm::diagonal(MultiplicityVector({1, 1})), JordanForm::diagonal(MultiplicityVector({1, 1}))});
  const auto classes = classes_from(t, s);
  SearchOptions opts;
  opts.seed = 2;
  opts.budget.restarts = 20;
  const auto report = search_tuple(classes, opts);
  REQUIRE(report.converged_count() >= 1);
  const Witness& w = first_witness(report);
  const CMat shifted = w.matrices[0] - classes[0].complex_value(0) * CMat::Identity(2, 2);
  CHECK(shifted.norm() > 1e-3);              // not scalar
  CHECK((shifted * shifted).norm() < 1e-8);  // nilpotent part of a single block
  CHECK(verify_witness(w, classes).centralizer_dim == 1);
}

TEST_CASE("case A quadruples found by the search are reducible") {
  const auto classes = case_a_classes();
  SearchOptions opts;
  opts.seed = 17;
  opts.budget.restarts = 30;
  const auto report = search_tuple(classes, opts);
  CHECK(report.irreducible_count(4) == 0);
  for (const auto& o : report.restarts) {
    if (!o.converged) continue;
    CHECK(o.diagnostics->centralizer_dim >= 2);
    CHECK(o.diagnostics->burnside_dim < 16);
  }
}

TEST_CASE("block diagonal witnesses") {
  const auto classes = case_a_classes();
  SearchOptions opts;
  opts.seed = 4;
  opts.budget.restarts = 10;
  const Witness w = build_block_diagonal_witness(classes, 2, opts);
  CHECK(w.residual < 1e-10);
  CHECK(direct_residual(w) < 1e-10);
  CHECK(w.matrices[0].topRightCorner(2, 2).norm() == 0.0);
  CHECK(w.matrices[0].bottomLeftCorner(2, 2).norm() == 0.0);
  const auto d = verify_witness(w, classes);
  CHECK(d.centralizer_dim >= 2);
  for (double r : d.class_residuals) CHECK(r < 1e-10);
  REQUIRE(d.invariant_subspace.has_value());
  CHECK(d.invariant_subspace->cols() == 2);
  REQUIRE(w.frames.size() == 4);
  for (std::size_t j = 0; j < 4; ++j) {
    const CMat m = w.frames[j] * classes[j].normal_form() * w.frames[j].inverse();
    CHECK((m - w.matrices[j]).norm() < 1e-8);
  }
}

TEST_CASE("scalar split into 1 x 1 blocks") {
  const JordanForm f = JordanForm::diagonal(MultiplicityVector({1, 1}));
  const std::vector<ConcreteClass> classes{
      {Mode::multiplicative, f, {Rational(1, 4), Rational(1, 3)}},
      {Mode::multiplicative, f, {Rational(3, 4), Rational(1, 6)}},
      {Mode::multiplicative, f, {Rational(0), Rational(1, 2)}}};
  const Witness w = build_block_diagonal_witness(classes, 1, {});
  CHECK(w.residual < 1e-12);
  for (const auto& m : w.matrices) CHECK(std::abs(m(0, 1)) + std::abs(m(1, 0)) == 0.0);
  CHECK(verify_witness(w, classes).centralizer_dim == 2);
}

TEST_CASE("impossible block splits") {
  CHECK_THROWS_WITH_AS(build_block_diagonal_witness(control_classes(), 1, {}), doctest::Contains("BlockSplitImpossible"),
                       Error);
  CHECK_THROWS_AS(build_block_diagonal_witness(case_a_classes(), 3, {}), Error);
  const Spectrum s = sample_spectrum(mvs({{2}, {1, 1}, {1, 1}, {1, 1}}), Mode::multiplicative, {}, 21);
  const ClassTuple t(Mode::multiplicative, 2,
                     {JordanForm(2, {{"a", Partition({2})}}), JordanForm::diagonal(MultiplicityVector({1, 1})),
                      JordanForm::diagonal(MultiplicityVector({1, 1})), JordanForm::diagonal(MultiplicityVector({1, 1}))});
  CHECK_THROWS_AS(build_block_diagonal_witness(classes_from(t, s), 1, {}), Error);
}

TEST_CASE("verification") {
  const auto classes = control_classes();
  Witness ident{Mode::multiplicative, std::vector<CMat>(4, CMat::Identity(2, 2)), 0.0, {}};
  const auto d = verify_witness(ident, classes);
  CHECK(d.residual == 0.0);
  for (double r : d.class_residuals) CHECK(r > 0.1);
  CHECK(d.centralizer_dim == 4);
  CHECK(d.burnside_dim == 1);

  Witness wrong{Mode::multiplicative, std::vector<CMat>(4, CMat::Identity(3, 3)), 0.0, {}};
  CHECK_THROWS_WITH_AS(verify_witness(wrong, classes), doctest::Contains("SizeMismatch"), Error);
  Witness short_tuple{Mode::multiplicative, std::vector<CMat>(3, CMat::Identity(2, 2)), 0.0, {}};
  CHECK_THROWS_AS(verify_witness(short_tuple, classes), Error);
}

TEST_CASE("diagnostics are stable under simultaneous conjugation") {
  const auto classes = control_classes();
  SearchOptions opts;
  opts.seed = 8;
  opts.budget.restarts = 10;
  const auto report = search_tuple(classes, opts);
  const Witness& w = first_witness(report);
  const auto before = verify_witness(w, classes);
  CHECK(std::abs(before.residual - w.residual) <= 1e-12 * std::max(1.0, w.residual) + 1e-15);
  auto rng = derived_rng(99, 0);
  const CMat p = random_frame(2, rng);
  Witness moved = w;
  for (auto& m : moved.matrices) m = p * m * p.inverse();
  const auto after = verify_witness(moved, classes);
  CHECK(after.burnside_dim == before.burnside_dim);
  CHECK(after.centralizer_dim == before.centralizer_dim);
  CHECK(after.residual <= before.residual + condition_number(p) * 1e-12);
  for (std::size_t j = 0; j < 4; ++j) CHECK(after.class_residuals[j] <= condition_number(p) * 1e-10);
}

TEST_CASE("Schur consistency across restarts") {
  const auto classes = case_a_classes(6);
  SearchOptions opts;
  opts.seed = 23;
  opts.budget.restarts = 12;
  const auto report = search_tuple(classes, opts);
  for (const auto& o : report.restarts) {
    if (!o.diagnostics) continue;
    if (o.diagnostics->burnside_dim == 16) CHECK(o.diagnostics->centralizer_dim == 1);
    CHECK(o.diagnostics->invariant_subspace.has_value() == (o.diagnostics->burnside_dim < 16));
  }
}

TEST_CASE("eigenvector frames reproduce the matrices") {
  const auto classes = control_classes();
  SearchOptions opts;
  opts.seed = 31;
  opts.budget.restarts = 5;
  const auto report = search_tuple(classes, opts);
  const Witness& w = first_witness(report);
  const auto frames = frames_from_eigenvectors(w, classes);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK((frames[j] * classes[j].normal_form() * frames[j].inverse() - w.matrices[j]).norm() < 1e-9);
  }
}
