#pragma once

#include "llab/diffusion.hpp"
#include "llab/solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace llab {

enum class Scenario { solve, adjoint, duality, macro, flatten, all };

std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& s);
const std::vector<std::string>& scenario_names();

struct DomainBlock {
  std::string kind = "slab";
  double L = 1.0;
  double lateral = 1.0;
  double delta0 = 0.25;
};

/// Counts rather than spacings; h_x = lateral / n_x, h_x3 = L / n_x3,
/// h_v = 2 v_max / (n_v - 1).
struct GridBlock {
  int n_x = 6;
  int n_x3 = 7;
  int n_v = 12;
  double v_max = 6.0;
};

struct ScheduleBlock {
  std::vector<double> epsilon_list{0.2};
  std::vector<double> a_list{0.1};
  std::vector<int> n_list{6};
  double T = 0.1;
  double fixed_point_tol = 1e-9;
  int picard_max = 200;
  double window_fraction = 0.1;
  double mismatch_tol = 1e-12;
  double compat_delta = 0.0;
  DiffusionMode diffusion = DiffusionMode::A;
};

struct MacroBlock {
  double epsilon = 0.3;
  double T = 0.25;
  int panels = 4;
  /// Coarse x grid is n_x^3; the refined run doubles it.
  int n_x = 4;
  int n_v = 12;
  double v_max = 6.0;
  double safety = 2.0;
  bool refine = true;
  /// Velocity grid of the coercivity spot check.
  int coercivity_n_v = 24;
  double coercivity_v_max = 8.0;
  int coercivity_samples = 10;
};

struct FlattenBlock {
  /// flat, tilted, paraboloid, saddle or all.
  std::string patch = "all";
  double tilt = 0.4;
  int samples = 10000;
  int continuity_samples = 500;
  int transport_samples = 200;
  double delta = 1e-2;
  double h = 0.02;
};

/// Base grid of the duality check; the refined level halves h_x, h_v and dt.
struct DualityBlock {
  int n_x = 3;
  int n_x3 = 4;
  int n_v = 8;
  double v_max = 4.0;
  bool refine = true;
  /// Residuals below this count as converged when comparing levels.
  double floor = 1e-9;
};

struct CheckBlock {
  int jacobian_anchors = 1000;
  int lipschitz_pairs = 20;
};

struct RunConfig {
  Scenario scenario = Scenario::solve;
  std::uint64_t seed = 12345;
  std::string output_dir = "llab_out";
  DomainBlock domain;
  GridBlock grid;
  ScheduleBlock schedule;
  MacroBlock macro;
  FlattenBlock flatten;
  DualityBlock duality;
  CheckBlock checks;

  /// Range checks; throws ConfigError naming the field path.
  void validate() const;
  SolverSchedule solver_schedule() const;
};

/// Reads the INI-style file. Unknown keys and malformed values are ConfigErrors.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& origin = "<string>");
/// Canonical text: every key, fixed order, doubles with 17 significant digits.
std::string serialize_config(const RunConfig& cfg);
/// FNV-1a 64 of the canonical text with output_dir blanked, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

/// Documented schema: (path, type, default, range) rows, same order as serialize_config.
struct SchemaRow {
  std::string path, type, default_value, range, doc;
};
std::vector<SchemaRow> config_schema();

/// Small and larger acceptance grids.
RunConfig profile_config(const std::string& profile);

}  // namespace llab
