#include "doctest.h"

#include "llab/config.hpp"
#include "llab/report.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <string>

using namespace llab;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ConfigError);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("harness_cli") {

TEST_CASE("canonical config round trips bit for bit") {
  RunConfig c = profile_config("desk");
  c.schedule.epsilon_list = {0.1 + 0.2, 1.0 / 3.0};
  c.seed = 987654321;
  std::string text = serialize_config(c);
  RunConfig back = parse_config(text);
  CHECK(serialize_config(back) == text);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(back.schedule.epsilon_list[0] == 0.1 + 0.2);
  CHECK(config_hash(c).size() == 16);
}

TEST_CASE("out-of-range values name their field") {
  CHECK(error_of("[schedule]\na_list = 1.5\n").find("schedule.a_list") != std::string::npos);
  CHECK(error_of("[grid]\nn_v = 1\n").find("grid.n_v") != std::string::npos);
  CHECK(error_of("[schedule]\nbogus = 1\n").find("schedule.bogus") != std::string::npos);
  CHECK(error_of("[grid]\nn_x = abc\n").find("grid.n_x") != std::string::npos);
  CHECK(error_of("scenario = everything\n") != "");
}

TEST_CASE("missing file is an IO error") {
  try {
    load_config("/nonexistent/llab.ini");
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::IoError);
  }
}

TEST_CASE("schema covers every serialized key") {
  auto rows = config_schema();
  std::string text = serialize_config(RunConfig{});
  for (const auto& r : rows) {
    auto dot = r.path.find('.');
    std::string key = dot == std::string::npos ? r.path : r.path.substr(dot + 1);
    CHECK(text.find(key + " = ") != std::string::npos);
  }
  CHECK(rows.size() > 40);
}

TEST_CASE("scenario names") {
  for (const auto& n : scenario_names()) CHECK(to_string(parse_scenario(n)) == n);
}

TEST_CASE("report comparison") {
  RunReport a;
  a.add("x", "fam", 1.0, "<=", 2.0);
  a.add("y", "fam", 5.0, ">=", 2.0);
  a.add("z", "info", 3.0, "info", 0.0);
  CHECK(a.all_pass());
  CHECK(compare_runs(a, a).empty());
  RunReport b = a;
  b.records[0].measured = 1.5;
  auto d = compare_runs(a, b);
  REQUIRE(d.size() == 1);
  CHECK(d[0].direction == -1);
  CHECK(d[0].delta == 0.5);
  RunReport c = a;
  c.records.pop_back();
  CHECK_THROWS_AS(compare_runs(a, c), Error);
  a.add("x", "fam", 0.0, "<=", 1.0);
  CHECK_THROWS_AS(a.check_unique(), Error);
}

TEST_CASE("report JSON keeps values and non-finite numbers") {
  RunReport a;
  a.scenario = "solve";
  a.config_hash = "0123456789abcdef";
  a.add("p", "fam", 0.1 + 0.2, "<=", 1.0);
  a.add("q", "info", std::numeric_limits<double>::infinity(), "info", 0.0);
  a.add("r", "info", std::nan(""), "info", 0.0);
  auto path = std::filesystem::temp_directory_path() / "llab_report_test.json";
  write_report_json(path.string(), a);
  RunReport b = read_report_json(path.string());
  std::filesystem::remove(path);
  REQUIRE(b.records.size() == 3);
  CHECK(b.records[0].measured == 0.1 + 0.2);
  CHECK(std::isinf(b.records[1].measured));
  CHECK(std::isnan(b.records[2].measured));
  CHECK(b.config_hash == a.config_hash);
}

TEST_CASE("CSV numbers carry full precision") {
  CHECK(std::stod(csv_number(0.1 + 0.2)) == 0.1 + 0.2);
  CHECK(std::stod(csv_number(1.0 / 3.0)) == 1.0 / 3.0);
}

}  // TEST_SUITE
