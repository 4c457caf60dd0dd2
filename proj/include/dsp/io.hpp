#pragma once

// JSON documents (schema "dsp/1") for tuples, spectra, witnesses and reports.
// Objects are written with sorted keys and rationals as "p/q" strings, so that
// equal values always serialize to identical bytes.

#include "dsp/deform.hpp"
#include "dsp/reduction.hpp"
#include "dsp/spectra.hpp"
#include "dsp/witness.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>

namespace dsp::io {

using Json = nlohmann::json;

inline constexpr const char* kSchema = "dsp/1";

/// A problem instance: a class tuple, a spectrum, or both.
struct Instance {
  std::optional<ClassTuple> tuple;
  std::optional<Spectrum> spectrum;
};

// Parsers. Every SchemaError message starts with the JSON pointer of the
// offending value.
JordanForm jordan_form_from_json(const Json& j, int n, const std::string& path = "");
ClassTuple class_tuple_from_json(const Json& j, const std::string& path = "");
Spectrum spectrum_from_json(const Json& j, const std::string& path = "");
Witness witness_from_json(const Json& j, const std::string& path = "");

/// Accepts an instance document {"tuple", "spectrum"}, a bare class tuple
/// (recognized by its "n" field) or a bare spectrum.
Instance instance_from_json(const Json& j);

Json to_json(const JordanForm& f);
Json to_json(const ClassTuple& t);
Json to_json(const Spectrum& s);
Json to_json(const Instance& inst);
Json to_json(const Witness& w);
Json to_json(const ConditionReport& c);
Json to_json(const DecisionTrace& t);
Json to_json(const StopCase& c);
Json to_json(const GcdData& g);
Json to_json(const Relation& r);
Json to_json(const ChainStructure& c);
Json to_json(const Diagnostics& d);
/// Wall time is left out unless requested, keeping reports reproducible.
Json to_json(const SearchReport& r, int n, bool include_timing = false);
Json to_json(const DeformResult& r);

/// Adds the schema tag to an object.
Json tagged(Json j);

std::string canonical(const Json& j);

Json parse(const std::string& text);
Json read_file(const std::string& path);
void write_file(const std::string& path, const Json& j);

Instance load_instance(const std::string& path);

}  // namespace dsp::io
