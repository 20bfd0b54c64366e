// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "asymdial/annotate.hpp"
#include "asymdial/corpus.hpp"
#include "asymdial/metrics.hpp"
#include "asymdial/profiles.hpp"

namespace py = pybind11;
using namespace asymdial;

// JSON crosses the boundary as text; the Python wrapper decodes it.
PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of asymdial";

  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<ParsedUserMessage>(m, "ParsedUserMessage")
      .def_readonly("inner_thoughts", &ParsedUserMessage::inner_thoughts)
      .def_readonly("satisfaction_score", &ParsedUserMessage::satisfaction_score)
      .def_readonly("satisfaction_explanation", &ParsedUserMessage::satisfaction_explanation)
      .def_readonly("visible_text", &ParsedUserMessage::visible_text)
      .def_readonly("satisfaction_defaulted", &ParsedUserMessage::satisfaction_defaulted)
      .def_readonly("inner_thoughts_defaulted", &ParsedUserMessage::inner_thoughts_defaulted)
      .def_readonly("warnings", &ParsedUserMessage::warnings);
  m.def("parse_user_message", [](const std::string& raw) { return parse_user_message(raw); });

  m.def(
      "classify",
      [](const std::string& kind, const std::string& text) {
        static const std::map<std::string, LexiconKind> kinds = {
            {"emotion", LexiconKind::emotion},
            {"intent", LexiconKind::intent},
            {"inner_emotion", LexiconKind::inner_emotion},
            {"inner_intent", LexiconKind::inner_intent}};
        const auto it = kinds.find(kind);
        if (it == kinds.end()) throw py::value_error("unknown lexicon kind: " + kind);
        const auto c = classify(default_lexicon(it->second), text);
        return py::make_tuple(c.label, c.match_count);
      },
      py::arg("kind"), py::arg("text"));

  m.def(
      "ssa",
      [](double s_avg, double clarify, double alpha, double beta, double lambda,
         const std::string& mode) {
        return ssa(s_avg, clarify, SsaWeights{alpha, beta, lambda}, ssa_mode_from_string(mode));
      },
      py::arg("s_avg"), py::arg("clarify"), py::arg("alpha") = 0.7, py::arg("beta") = 0.3,
      py::arg("lam") = 7.75, py::arg("mode") = "appendix");

  m.def(
      "satisfaction_stats",
      [](const std::vector<double>& scores) {
        const auto s = satisfaction_stats(scores);
        py::dict d;
        d["final"] = s.final;
        d["average"] = s.average;
        d["trend"] = s.trend;
        d["min"] = s.min;
        d["max"] = s.max;
        d["variance"] = s.variance;
        return d;
      },
      py::arg("scores"));

  m.def(
      "clarify_score",
      [](const std::vector<std::string>& changes) {
        std::vector<TurnPairJudgment> js;
        for (std::size_t i = 0; i < changes.size(); ++i) {
          const auto c = change_from_string(changes[i]);
          if (!c) throw py::value_error("not a change literal: " + changes[i]);
          TurnPairJudgment j;
          j.index = static_cast<int>(i);
          j.turn_pair = turn_pair_label(j.index);
          j.clarity_change = *c;
          js.push_back(j);
        }
        return clarify_score(js);
      },
      py::arg("clarity_changes"));

  m.def(
      "generate_profile_json",
      [](std::uint64_t seed, int uncertainty, std::optional<int> difficulty) {
        ProfileRequest req;
        req.seed = seed;
        req.uncertainty = UncertaintyLevel::from_percent(uncertainty);
        req.difficulty = difficulty;
        return profile_to_json(generate_profile(req)).dump();
      },
      py::arg("seed"), py::arg("uncertainty") = 0, py::arg("difficulty") = std::nullopt);

  m.def(
      "validate_record_json",
      [](const std::string& text) {
        std::vector<std::pair<std::string, std::string>> issues;
        for (const auto& i : validate_record(parse_json_text(text)).issues) {
          issues.emplace_back(i.path, i.message);
        }
        return issues;
      },
      py::arg("text"));

  m.def(
      "recorded_report_json",
      [](const std::string& text) { return report_from_recorded(parse_json_text(text)).to_json().dump(); },
      py::arg("text"));
}
