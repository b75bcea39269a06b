#pragma once

#include "llab/config.hpp"
#include "llab/report.hpp"

#include <string>

namespace llab {

/// Property families; the acceptance binary groups records by these labels.
namespace family {
inline constexpr const char* max_principle = "maximum principle";
inline constexpr const char* l1 = "L1 contraction";
inline constexpr const char* adjoint = "adjoint certification";
inline constexpr const char* duality = "duality identity";
inline constexpr const char* jacobian = "Jacobian bounds";
inline constexpr const char* contraction = "fixed-point contraction";
inline constexpr const char* trace = "trace bound";
inline constexpr const char* qeps = "Q exactness";
inline constexpr const char* macro = "macro-micro inequality";
inline constexpr const char* decay = "monotone L2 decay";
inline constexpr const char* flatten = "flattening certificates";
inline constexpr const char* ortho = "orthonormality";
inline constexpr const char* positivity = "positivity";
inline constexpr const char* info = "diagnostic";
}  // namespace family

/// Runs the configured scenario. With write_artifacts the CSV series, SVG
/// plots, records and report land in cfg.output_dir.
RunReport run_scenario(const RunConfig& cfg, bool write_artifacts = true);

void scenario_solve(const RunConfig& cfg, RunReport& rep, const std::string& dir);
void scenario_adjoint(const RunConfig& cfg, RunReport& rep, const std::string& dir);
void scenario_duality(const RunConfig& cfg, RunReport& rep, const std::string& dir);
void scenario_macro(const RunConfig& cfg, RunReport& rep, const std::string& dir);
void scenario_flatten(const RunConfig& cfg, RunReport& rep, const std::string& dir);

/// Max |a - b| over two raw little-endian double files of equal length.
double field_file_difference(const std::string& a, const std::string& b);

}  // namespace llab
