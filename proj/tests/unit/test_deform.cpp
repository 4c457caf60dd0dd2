#include "dsp/deform.hpp"
#include "dsp/error.hpp"

#include <doctest.h>

using namespace dsp;

namespace {

std::vector<MultiplicityVector> mvs(const std::vector<std::vector<int>>& pmv) {
  std::vector<MultiplicityVector> out;
  for (const auto& mv : pmv) out.emplace_back(mv);
  return out;
}

Witness first_witness(std::span<const ConcreteClass> classes, std::uint64_t seed) {
  SearchOptions opts;
  opts.seed = seed;
  opts.budget.restarts = 10;
  for (const auto& o : search_tuple(classes, opts).restarts) {
    if (o.witness) return *o.witness;
  }
  throw std::runtime_error("search failed");
}

Spectrum shifted(const Spectrum& s, const std::vector<std::pair<std::size_t, Rational>>& shifts) {
  auto forms = s.forms();
  for (const auto& [j, delta] : shifts) forms[j][0].value += delta;
  return Spectrum(s.mode(), forms);
}

}  // namespace

TEST_CASE("deforming the positive control") {
  const Spectrum source = sample_spectrum(mvs({{1, 1}, {1, 1}, {1, 1}, {1, 1}}), Mode::multiplicative, {}, 1);
  const auto classes = classes_from_spectrum(source);
  const Witness w = first_witness(classes, 11);
  const Spectrum target = shifted(source, {{0, Rational(1, 101)}, {1, Rational(-1, 101)}});
  REQUIRE(eigen_constraint_defect(target) == 0);

  const auto r = deform_tuple(w, classes, target);
  CHECK(r.step_params.front() == 0.0);
  CHECK(r.step_params.back() == 1.0);
  CHECK(r.step_params.size() >= 21);
  for (double res : r.step_residuals) CHECK(res < 1e-10);
  CHECK(r.witness.residual < 1e-10);
  CHECK(r.centralizer_dim == 1);
  const auto d = verify_witness(r.witness, r.final_classes);
  for (double c : d.class_residuals) CHECK(c < 1e-9);
  CHECK(spectrum_of(r.final_classes) == target);

  // the target is reachable directly as well
  const auto direct = classes_from_spectrum(target);
  SearchOptions opts;
  opts.seed = 12;
  opts.budget.restarts = 10;
  CHECK(search_tuple(direct, opts).converged_count() >= 1);
}

TEST_CASE("additive deformation") {
  const Spectrum source = sample_spectrum(mvs({{1, 1}, {1, 1}, {1, 1}, {1, 1}}), Mode::additive, {}, 2);
  const auto classes = classes_from_spectrum(source);
  const Witness w = first_witness(classes, 3);
  const Spectrum target = shifted(source, {{2, Rational(1, 7)}, {3, Rational(-1, 7)}});
  const auto r = deform_tuple(w, classes, target, {10});
  for (double res : r.step_residuals) CHECK(res < 1e-10);
  CHECK(r.centralizer_dim == 1);
}

TEST_CASE("deformation preconditions") {
  const Spectrum source = sample_spectrum(mvs({{1, 1}, {1, 1}, {1, 1}, {1, 1}}), Mode::multiplicative, {}, 1);
  const auto classes = classes_from_spectrum(source);
  const Witness w = first_witness(classes, 11);

  // valid endpoint, but the shortest path for each angle does not keep the total integral
  const Spectrum drift = shifted(source, {{0, Rational(3, 10)}, {1, Rational(3, 10)}, {2, Rational(4, 10)}});
  REQUIRE(eigen_constraint_defect(drift) == 0);
  CHECK_THROWS_WITH_AS(deform_tuple(w, classes, drift), doctest::Contains("InvalidTarget"), Error);

  const Spectrum invalid = shifted(source, {{0, Rational(1, 9)}});
  CHECK_THROWS_WITH_AS(deform_tuple(w, classes, invalid), doctest::Contains("SpectrumInvalid"), Error);

  const Spectrum reshaped(Mode::multiplicative, {{{Rational(0), 2}}, source.forms()[1], source.forms()[2], source.forms()[3]});
  CHECK_THROWS_AS(deform_tuple(w, classes, reshaped), Error);

  const auto case_a = classes_from_spectrum(sample_spectrum(mvs({{2, 2}, {2, 2}, {2, 2}, {2, 2}}), Mode::multiplicative,
                                                            {SampleTarget::Kind::relatively_generic, Rational(0)}, 2));
  SearchOptions opts;
  opts.budget.restarts = 10;
  const Witness blocky = build_block_diagonal_witness(case_a, 2, opts);
  CHECK_THROWS_WITH_AS(deform_tuple(blocky, case_a, spectrum_of(case_a)), doctest::Contains("CentralizerNontrivial"),
                       Error);
}

TEST_CASE("a Jordan block splits into its corresponding diagonal class") {
  const Spectrum s = sample_spectrum(mvs({{2}, {1, 1}, {1, 1}, {1, 1}}), Mode::multiplicative, {}, 21);
  const auto diag11 = JordanForm::diagonal(MultiplicityVector({1, 1}));
  const ClassTuple t(Mode::multiplicative, 2, {JordanForm(2, {{"a", Partition({2})}}), diag11, diag11, diag11});
  const auto classes = classes_from(t, s);
  const Witness w = first_witness(classes, 2);
  REQUIRE(w.frames.size() == 4);

  const Rational lambda = s.forms()[0][0].value;
  const Rational eps(1, 50);
  auto forms = s.forms();
  forms[0] = {{lambda + eps, 1}, {lambda - eps, 1}};
  const Spectrum target(Mode::multiplicative, forms);

  const auto r = deform_tuple(w, classes, target);
  for (double res : r.step_residuals) CHECK(res < 1e-10);
  REQUIRE(r.final_classes[0].jnf.is_diagonal());
  CHECK(multiplicity_vector(r.final_classes[0].jnf) == corresponding_diagonal(t.forms()[0]));
  const auto d = verify_witness(r.witness, r.final_classes);
  for (double c : d.class_residuals) CHECK(c < 1e-9);
  // the frame now refers to the diagonal normal form
  const CMat m = r.witness.frames[0] * r.final_classes[0].normal_form() * r.witness.frames[0].inverse();
  CHECK((m - r.witness.matrices[0]).norm() < 1e-8);
}

TEST_CASE("split targets must follow the dual partition") {
  // blocks (2, 1) split into levels with multiplicities (2, 1)
  const JordanForm f(3, {{"a", Partition({2, 1})}});
  const std::vector<ConcreteClass> source{{Mode::additive, f, {Rational(0)}},
                                          {Mode::additive, JordanForm::diagonal(MultiplicityVector({2, 1})),
                                           {Rational(1), Rational(-2)}}};
  const Spectrum good(Mode::additive, {{{Rational(1, 3), 2}, {Rational(-2, 3), 1}},
                                       {{Rational(1), 2}, {Rational(-2), 1}}});
  const auto targets = deformation_targets(source, good);
  CHECK(targets[0].jnf.is_diagonal());
  CHECK(targets[0].jnf.multiplicity(0) == 2);
  const Spectrum bad(Mode::additive, {{{Rational(1, 3), 1}, {Rational(-1, 3), 2}},
                                      {{Rational(1), 2}, {Rational(-2), 1}}});
  CHECK_THROWS_WITH_AS(deformation_targets(source, bad), doctest::Contains("InvalidTarget"), Error);
}
