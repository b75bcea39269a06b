// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include "llab/config.hpp"
#include "llab/report.hpp"
#include "llab/scenarios.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>

namespace fs = std::filesystem;
using namespace llab;

namespace {

struct Criterion {
  int id;
  const char* label;
  const char* family;
};

const Criterion kCriteria[] = {
    {1, "maximum principle", family::max_principle},
    {2, "L1 contraction", family::l1},
    {3, "adjoint certification", family::adjoint},
    {4, "duality identity", family::duality},
    {5, "Jacobian bounds", family::jacobian},
    {6, "fixed-point contraction", family::contraction},
    {7, "trace bound", family::trace},
    {8, "Q exactness and mean-zero", family::qeps},
    {9, "macro-micro inequality", family::macro},
    {10, "monotone L2 decay", family::decay},
    {11, "flattening certificates", family::flatten},
    {12, "orthonormality and Burnett normalization", family::ortho},
    {13, "positivity", family::positivity},
};

// slack in units of the threshold; negative means failing
double slack(const PropertyRecord& r) {
  double s = r.relation == ">=" ? r.measured - r.threshold : r.threshold - r.measured;
  return s / std::max(std::abs(r.threshold), 1e-300);
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Reduced solve twice; every CSV and raw field must match byte for byte.
bool determinism(const RunConfig& base, const fs::path& root, std::string& detail) {
  RunConfig c = base;
  c.scenario = Scenario::solve;
  c.grid = {4, 5, 8, 6.0};
  c.schedule.n_list = {3};
  c.checks.jacobian_anchors = 50;
  c.checks.lipschitz_pairs = 4;
  fs::path da = root / "det_a", db = root / "det_b";
  fs::remove_all(da);
  fs::remove_all(db);
  c.output_dir = da.string();
  run_scenario(c, true);
  c.output_dir = db.string();
  run_scenario(c, true);
  int files = 0;
  for (const auto& e : fs::directory_iterator(da)) {
    auto ext = e.path().extension();
    if (ext != ".csv" && ext != ".f64") continue;
    ++files;
    fs::path other = db / e.path().filename();
    if (!fs::exists(other) || read_bytes(e.path()) != read_bytes(other)) {
      detail = e.path().filename().string() + " differs";
      return false;
    }
  }
  detail = std::to_string(files) + " files identical";
  return files > 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string profile = "ci", output;
  app.add_option("--profile", profile, "ci or desk")->check(CLI::IsMember({"ci", "desk"}));
  app.add_option("--output", output, "artifact directory (default acceptance_<profile>)");
  CLI11_PARSE(app, argc, argv);

  RunConfig cfg = profile_config(profile);
  cfg.scenario = Scenario::all;
  cfg.output_dir = output.empty() ? "acceptance_" + profile : output;
  cfg.validate();

  RunReport rep;
  try {
    rep = run_scenario(cfg, true);
  } catch (const Error& e) {
    std::printf("error: %s\n", e.what());
    return 2;
  }

  int failed = 0;
  std::printf("profile %s  config %s  %.1fs\n", profile.c_str(), rep.config_hash.c_str(), rep.wall_time);
  for (const auto& c : kCriteria) {
    int n = 0;
    bool pass = true;
    const PropertyRecord* worst = nullptr;
    for (const auto& r : rep.records) {
      if (r.anchor != c.family || r.relation == "info") continue;
      ++n;
      pass = pass && r.pass;
      // a failing record always wins; otherwise the tightest one
      if (!worst || (!r.pass && worst->pass) || (r.pass == worst->pass && slack(r) < slack(*worst)))
        worst = &r;
    }
    if (n == 0) pass = false;
    failed += !pass;
    if (worst)
      std::printf("%s %2d %-42s %3d checks; tightest %s = %.4g %s %.10g%s%s\n", pass ? "PASS" : "FAIL",
                  c.id, c.label, n, worst->name.c_str(), worst->measured, worst->relation.c_str(),
                  worst->threshold, worst->note.empty() ? "" : "  ", worst->note.c_str());
    else
      std::printf("FAIL %2d %-42s no records\n", c.id, c.label);
  }

  std::string detail;
  bool det = false;
  try {
    det = determinism(cfg, fs::path(cfg.output_dir), detail);
  } catch (const Error& e) {
    detail = e.what();
  }
  failed += !det;
  std::printf("%s 14 %-42s %s\n", det ? "PASS" : "FAIL", "determinism", detail.c_str());
  std::printf("%s\n", failed ? "ACCEPTANCE FAILED" : "all criteria pass");
  return failed ? 1 : 0;
}
