// Batch front end: run scenarios, compare reports, check configs.

#include "llab/config.hpp"
#include "llab/report.hpp"
#include "llab/scenarios.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>

namespace fs = std::filesystem;
using namespace llab;

namespace {

int exit_code(const Error& e) {
  switch (e.code()) {
    case Errc::ConfigError: return 2;
    case Errc::IoError: return 3;
    case Errc::MismatchedSuites: return 4;
    default: return 5;
  }
}

void print_report(const RunReport& r) {
  std::printf("scenario %s  config %s  version %s  %.1fs\n", r.scenario.c_str(), r.config_hash.c_str(),
              r.code_version.c_str(), r.wall_time);
  for (const auto& p : r.records) {
    if (p.relation == "info")
      std::printf("  [info] %-52s %.6g\n", p.name.c_str(), p.measured);
    else
      std::printf("  [%s] %-52s %.6g %s %.6g%s%s\n", p.pass ? "PASS" : "FAIL", p.name.c_str(), p.measured,
                  p.relation.c_str(), p.threshold, p.note.empty() ? "" : "  ", p.note.c_str());
  }
  std::printf("%s\n", r.all_pass() ? "all asserted properties pass" : "SOME ASSERTED PROPERTIES FAIL");
}

std::string report_path(const std::string& p) {
  return fs::is_directory(p) ? (fs::path(p) / "report.json").string() : p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"llab: regularized kinetic boundary laboratory"};
  app.require_subcommand(1);

  std::string config_path, output, scenario;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "run a scenario and write CSV/SVG artifacts");
  run->add_option("--config", config_path, "config file (defaults when omitted)")->check(CLI::ExistingFile);
  run->add_option("--output", output, "output directory (overrides output_dir)");
  auto* seed_opt = run->add_option("--seed", seed, "seed (overrides seed)");
  run->add_option("--scenario", scenario, "scenario (overrides scenario)");

  std::string cmp_a, cmp_b;
  auto* cmp = app.add_subcommand("compare", "tabulate measured-value differences of two runs");
  cmp->add_option("first", cmp_a, "report.json or run directory")->required();
  cmp->add_option("second", cmp_b, "report.json or run directory")->required();

  std::string vc_path;
  bool vc_print = false;
  auto* vc = app.add_subcommand("validate-config", "parse and range-check a config");
  vc->add_option("--config", vc_path, "config file")->required();
  vc->add_flag("--print", vc_print, "print the canonical form");

  auto* ls = app.add_subcommand("list-scenarios", "list scenario names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ls) {
      for (const auto& n : scenario_names()) std::printf("%s\n", n.c_str());
      return 0;
    }
    if (*vc) {
      RunConfig c = load_config(vc_path);
      std::printf("ok %s\n", config_hash(c).c_str());
      if (vc_print) std::printf("%s", serialize_config(c).c_str());
      return 0;
    }
    if (*run) {
      RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
      if (!output.empty()) c.output_dir = output;
      if (*seed_opt) c.seed = seed;
      if (!scenario.empty()) c.scenario = parse_scenario(scenario);
      c.validate();
      RunReport r = run_scenario(c, true);
      print_report(r);
      std::printf("artifacts in %s\n", c.output_dir.c_str());
      return r.all_pass() ? 0 : 1;
    }
    if (*cmp) {
      RunReport a = read_report_json(report_path(cmp_a)), b = read_report_json(report_path(cmp_b));
      auto diff = compare_runs(a, b);
      if (diff.empty()) std::printf("no differences\n");
      for (const auto& d : diff) {
        const char* dir = d.direction > 0 ? "better" : d.direction < 0 ? "worse" : "-";
        std::printf("%-52s %.6g -> %.6g  delta %.3e  %s%s\n", d.name.c_str(), d.a, d.b, d.delta, dir,
                    d.pass_a != d.pass_b ? (d.pass_b ? "  now passes" : "  now fails") : "");
      }
      if (fs::is_directory(cmp_a) && fs::is_directory(cmp_b)) {
        std::set<std::string> names;
        for (const auto& e : fs::directory_iterator(cmp_a))
          if (e.path().extension() == ".f64") names.insert(e.path().filename().string());
        for (const auto& n : names) {
          fs::path pb = fs::path(cmp_b) / n;
          if (!fs::exists(pb)) continue;
          std::printf("field %s: sup |a - b| = %.6e\n", n.c_str(),
                      field_file_difference((fs::path(cmp_a) / n).string(), pb.string()));
        }
      }
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e);
  }
  return 0;
}
