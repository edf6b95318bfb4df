#pragma once

#include <string>

#include "json.hpp"

#include "kepod/select.hpp"
#include "kepod/solver.hpp"

namespace kepod {

nlohmann::json to_json(const Unknowns& u);
nlohmann::json to_json(const KeplerianElements& el);
nlohmann::json to_json(const SolverConfig& config);

/// Q rows, P5, P6 and v0..v8 with the geometry vectors behind them.
nlohmann::json coefficients_to_json(const CoefficientSet& cs);
/// Inverse of coefficients_to_json.  The grouped resultant factors are rebuilt
/// from the stored pair.  Throws ParseError.
CoefficientSet coefficients_from_json(const nlohmann::json& j);
CoefficientSet parse_coefficients(const std::string& text);

/// Every field of the candidate plus the input hash and the tolerances used.
nlohmann::json candidate_to_json(const CandidateSolution& cand, const std::string& input_hash,
                                 const SolverConfig& config);

nlohmann::json selection_to_json(const SelectionReport& report);

struct ReportOptions {
  bool dump_coeffs = false;
};

/// {input_hash, tolerances, real_roots, candidates, selection?, coefficients?}
nlohmann::json solve_report(const ODInput& input, const SolveResult& result,
                            const SolverConfig& config, const SelectionReport* selection,
                            const ReportOptions& options = {});

}  // namespace kepod
