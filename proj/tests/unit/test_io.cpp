#include "dsp/error.hpp"
#include "dsp/io.hpp"

#include <doctest.h>

using namespace dsp;
using io::Json;

namespace {

const char* kTuple = R"({
  "schema": "dsp/1",
  "mode": "multiplicative",
  "n": 17,
  "forms": [
    {"n": 17, "groups": [{"label": "a", "blocks": [6, 4, 3]}, {"label": "b", "blocks": [3, 1]}]},
    {"mv": [9, 8]},
    {"mv": [17]}
  ]
})";

std::string schema_error(const Json& j) {
  try {
    io::instance_from_json(j);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SchemaError);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("class tuples round-trip to identical bytes") {
  const auto t = io::class_tuple_from_json(io::parse(kTuple));
  CHECK(t.n() == 17);
  CHECK(t.forms()[0].slots()[0].blocks.parts() == std::vector<int>{6, 4, 3});
  const std::string once = io::canonical(io::to_json(t));
  const auto back = io::class_tuple_from_json(io::parse(once));
  CHECK(back == t);
  CHECK(io::canonical(io::to_json(back)) == once);
}

TEST_CASE("mv shorthand expands to a diagonal form") {
  const auto t = io::class_tuple_from_json(io::parse(kTuple));
  const auto& f = t.forms()[1];
  CHECK(f.is_diagonal());
  CHECK(f.slots().size() == 2);
  CHECK(multiplicity_vector(f).components() == std::vector<int>{9, 8});
  CHECK(f.slots()[0].label == "e1");
  const auto j = io::to_json(t);
  CHECK(j["forms"][1]["groups"][0]["blocks"].size() == 9);
}

TEST_CASE("keys are written in sorted order") {
  const auto text = io::canonical(io::to_json(io::class_tuple_from_json(io::parse(kTuple))));
  CHECK(text.find("\"forms\"") < text.find("\"mode\""));
  CHECK(text.find("\"mode\"") < text.rfind("\"n\""));
}

TEST_CASE("schema errors name the offending path") {
  auto j = io::parse(kTuple);
  j["forms"][1]["colour"] = "red";
  CHECK(schema_error(j).find("/forms/1/colour: unknown field") != std::string::npos);

  j = io::parse(kTuple);
  j["forms"][0]["groups"][1].erase("blocks");
  CHECK(schema_error(j).find("/forms/0/groups/1/blocks: missing field") != std::string::npos);

  j = io::parse(kTuple);
  j["forms"][0]["groups"][0]["blocks"][1] = "four";
  CHECK(schema_error(j).find("/forms/0/groups/0/blocks/1: expected an integer") != std::string::npos);

  j = io::parse(kTuple);
  j["forms"][2]["mv"] = {16};
  CHECK(schema_error(j).find("/forms/2/mv") != std::string::npos);

  j = io::parse(kTuple);
  j["schema"] = "dsp/0";
  CHECK(schema_error(j).find("/schema") != std::string::npos);

  j = io::parse(kTuple);
  j["mode"] = "tropical";
  CHECK(schema_error(j).find("/mode") != std::string::npos);

  CHECK_THROWS_WITH_AS(io::parse("{\"n\": "), doctest::Contains("malformed JSON"), Error);

  Json inst = {{"tuple", io::parse(kTuple)}, {"extra", 1}};
  CHECK(schema_error(inst).find("/extra: unknown field") != std::string::npos);
}

TEST_CASE("spectra round-trip") {
  const Spectrum s(Mode::multiplicative, {{{Rational(1, 4), 2}, {Rational(3, 4), 1}}, {{Rational(0), 3}}});
  const Json j = io::to_json(s);
  CHECK(j["forms"][0][0]["angle"] == "1/4");
  CHECK(j["forms"][1][0]["angle"] == "0");
  const auto back = io::spectrum_from_json(j);
  CHECK(back == s);
  CHECK(io::canonical(io::to_json(back)) == io::canonical(j));

  const Spectrum a(Mode::additive, {{{Rational(-1, 2), 1}, {Rational(1, 2), 1}}, {{Rational(0), 2}}});
  const Json ja = io::to_json(a);
  CHECK(ja["forms"][0][0]["value"] == "-1/2");
  CHECK(io::spectrum_from_json(ja) == a);

  Json wrong = ja;
  wrong["forms"][0][0]["angle"] = "1/2";
  CHECK_THROWS_WITH_AS(io::spectrum_from_json(wrong), doctest::Contains("/forms/0/0/angle: unknown field"), Error);
  Json bad = j;
  bad["forms"][0][0]["angle"] = "1/0";
  CHECK_THROWS_WITH_AS(io::spectrum_from_json(bad), doctest::Contains("/forms/0/0/angle"), Error);
}

TEST_CASE("instances of every shape") {
  const auto t = io::instance_from_json(io::parse(kTuple));
  CHECK(t.tuple.has_value());
  CHECK_FALSE(t.spectrum.has_value());
  const Spectrum s(Mode::multiplicative, {{{Rational(1, 2), 2}}, {{Rational(0), 2}}});
  const auto sp = io::instance_from_json(io::to_json(s));
  CHECK(sp.spectrum == s);
  const io::Instance both{diagonal_tuple(Mode::multiplicative, {{2}, {2}}), s};
  const Json j = io::to_json(both);
  CHECK(j["schema"] == "dsp/1");
  const auto back = io::instance_from_json(j);
  CHECK(back.tuple == both.tuple);
  CHECK(back.spectrum == both.spectrum);
  CHECK(io::canonical(io::to_json(back)) == io::canonical(j));
}

TEST_CASE("witnesses round-trip exactly") {
  Witness w;
  w.mode = Mode::multiplicative;
  CMat a(2, 2);
  a << cd(0.1, 1.0 / 3.0), cd(2.0, -1e-17), cd(-0.7, 0.0), cd(1.0 / 7.0, 5.5);
  w.matrices = {a, a.inverse()};
  w.residual = tuple_residual(w.mode, w.matrices);
  w.frames = {CMat::Identity(2, 2), a};
  const Json j = io::tagged(io::to_json(w));
  const Witness back = io::witness_from_json(j);
  CHECK(back.matrices[0] == w.matrices[0]);
  CHECK(back.matrices[1] == w.matrices[1]);
  CHECK(back.frames[1] == a);
  CHECK(back.residual == w.residual);
  CHECK(io::canonical(io::tagged(io::to_json(back))) == io::canonical(j));

  Json bad = j;
  bad["matrices"][1][0][1] = {1.0};
  CHECK_THROWS_WITH_AS(io::witness_from_json(bad), doctest::Contains("/matrices/1/0/1"), Error);
}

TEST_CASE("reports leave out timing unless asked") {
  SearchReport r;
  r.seed = 3;
  r.tol = 1e-10;
  r.wall_time_s = 1.5;
  r.best_residual = std::numeric_limits<double>::infinity();
  RestartOutcome o;
  o.residual = std::numeric_limits<double>::infinity();
  r.restarts.push_back(o);
  const Json j = io::to_json(r, 2);
  CHECK_FALSE(j.contains("wall_time_s"));
  CHECK(j["best_residual"].is_null());
  CHECK(io::to_json(r, 2, true)["wall_time_s"] == 1.5);
}

TEST_CASE("decision traces serialize every step") {
  const auto tr = decide_generic(diagonal_tuple(Mode::multiplicative, {{3, 1}, {2, 2}, {2, 2}, {2, 2}}));
  const Json j = io::to_json(tr);
  CHECK(j["steps"].size() == 2);
  CHECK(j["steps"][0]["n1"] == 3);
  CHECK(j["verdict"] == "solvable");
  CHECK(j["kappa"] == 2);
  CHECK_FALSE(j.contains("failed_condition"));
}
