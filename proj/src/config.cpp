#include "llab/config.hpp"

#include "CLI11.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace llab {

namespace {

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& path, const std::string& s) {
  const char* b = s.c_str();
  char* e = nullptr;
  errno = 0;
  double v = std::strtod(b, &e);
  if (e == b || *e != '\0' || errno == ERANGE || !std::isfinite(v))
    throw Error(Errc::ConfigError, path + ": not a finite number: '" + s + "'");
  return v;
}

long long parse_int(const std::string& path, const std::string& s) {
  const char* b = s.c_str();
  char* e = nullptr;
  errno = 0;
  long long v = std::strtoll(b, &e, 10);
  if (e == b || *e != '\0' || errno == ERANGE)
    throw Error(Errc::ConfigError, path + ": not an integer: '" + s + "'");
  return v;
}

bool parse_bool(const std::string& path, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw Error(Errc::ConfigError, path + ": not a boolean: '" + s + "'");
}

struct Range {
  double lo = -HUGE_VAL, hi = HUGE_VAL;
  bool lo_open = false, hi_open = false;

  bool ok(double v) const {
    bool a = lo_open ? v > lo : v >= lo;
    bool b = hi_open ? v < hi : v <= hi;
    return a && b;
  }
  std::string str() const {
    auto end = [](double x) { return std::isinf(x) ? std::string(x < 0 ? "-inf" : "inf") : fmt_double(x); };
    return std::string(lo_open ? "(" : "[") + end(lo) + ", " + end(hi) + (hi_open ? ")" : "]");
  }
};

Range open(double lo, double hi) { return {lo, hi, true, true}; }
Range closed(double lo, double hi) { return {lo, hi, false, false}; }

struct Field {
  std::string path, type, range, doc;
  std::function<void(RunConfig&, const std::vector<std::string>&)> set;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(const RunConfig&)> check;
};

template <class Acc>
Field dbl(std::string path, Acc acc, Range r, std::string doc) {
  Field f{path, "double", r.str(), std::move(doc), {}, {}, {}};
  f.set = [path, acc](RunConfig& c, const std::vector<std::string>& in) {
    if (in.size() != 1) throw Error(Errc::ConfigError, path + ": expected one value");
    acc(c) = parse_double(path, in[0]);
  };
  f.get = [acc](const RunConfig& c) { RunConfig t = c; return fmt_double(acc(t)); };
  f.check = [path, acc, r](const RunConfig& c) {
    RunConfig t = c;
    double v = acc(t);
    if (!r.ok(v)) throw Error(Errc::ConfigError, path + " = " + fmt_double(v) + " outside " + r.str());
  };
  return f;
}

template <class T, class Acc>
Field integer(std::string path, Acc acc, Range r, std::string doc) {
  Field f{path, "int", r.str(), std::move(doc), {}, {}, {}};
  f.set = [path, acc](RunConfig& c, const std::vector<std::string>& in) {
    if (in.size() != 1) throw Error(Errc::ConfigError, path + ": expected one value");
    long long v = parse_int(path, in[0]);
    if (v < 0 && std::is_unsigned_v<T>) throw Error(Errc::ConfigError, path + ": must be non-negative");
    acc(c) = static_cast<T>(v);
  };
  f.get = [acc](const RunConfig& c) { RunConfig t = c; return std::to_string(acc(t)); };
  f.check = [path, acc, r](const RunConfig& c) {
    RunConfig t = c;
    double v = static_cast<double>(acc(t));
    if (!r.ok(v)) throw Error(Errc::ConfigError, path + " = " + std::to_string(acc(t)) + " outside " + r.str());
  };
  return f;
}

template <class Acc>
Field boolean(std::string path, Acc acc, std::string doc) {
  Field f{path, "bool", "true|false", std::move(doc), {}, {}, {}};
  f.set = [path, acc](RunConfig& c, const std::vector<std::string>& in) {
    if (in.size() != 1) throw Error(Errc::ConfigError, path + ": expected one value");
    acc(c) = parse_bool(path, in[0]);
  };
  f.get = [acc](const RunConfig& c) { RunConfig t = c; return std::string(acc(t) ? "true" : "false"); };
  f.check = [](const RunConfig&) {};
  return f;
}

template <class Acc>
Field choice(std::string path, Acc acc, std::vector<std::string> allowed, std::string doc) {
  std::string r;
  for (const auto& a : allowed) r += (r.empty() ? "" : "|") + a;
  Field f{path, "string", r, std::move(doc), {}, {}, {}};
  f.set = [path, acc](RunConfig& c, const std::vector<std::string>& in) {
    if (in.size() != 1) throw Error(Errc::ConfigError, path + ": expected one value");
    acc(c) = in[0];
  };
  f.get = [acc](const RunConfig& c) { RunConfig t = c; return std::string(acc(t)); };
  f.check = [path, acc, allowed, r](const RunConfig& c) {
    RunConfig t = c;
    std::string v = acc(t);
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
      throw Error(Errc::ConfigError, path + " = '" + v + "' not one of " + r);
  };
  return f;
}

template <class Acc>
Field dbl_list(std::string path, Acc acc, Range r, std::string doc) {
  Field f{path, "double list", r.str(), std::move(doc), {}, {}, {}};
  f.set = [path, acc](RunConfig& c, const std::vector<std::string>& in) {
    std::vector<double> v;
    for (const auto& s : in) v.push_back(parse_double(path, s));
    acc(c) = v;
  };
  f.get = [acc](const RunConfig& c) {
    RunConfig t = c;
    std::string s;
    for (double x : acc(t)) s += (s.empty() ? "" : ", ") + fmt_double(x);
    return s;
  };
  f.check = [path, acc, r](const RunConfig& c) {
    RunConfig t = c;
    const auto& v = acc(t);
    if (v.empty()) throw Error(Errc::ConfigError, path + " must not be empty");
    for (double x : v)
      if (!r.ok(x)) throw Error(Errc::ConfigError, path + ": value " + fmt_double(x) + " outside " + r.str());
  };
  return f;
}

template <class Acc>
Field int_list(std::string path, Acc acc, Range r, std::string doc) {
  Field f{path, "int list", r.str(), std::move(doc), {}, {}, {}};
  f.set = [path, acc](RunConfig& c, const std::vector<std::string>& in) {
    std::vector<int> v;
    for (const auto& s : in) v.push_back(static_cast<int>(parse_int(path, s)));
    acc(c) = v;
  };
  f.get = [acc](const RunConfig& c) {
    RunConfig t = c;
    std::string s;
    for (int x : acc(t)) s += (s.empty() ? "" : ", ") + std::to_string(x);
    return s;
  };
  f.check = [path, acc, r](const RunConfig& c) {
    RunConfig t = c;
    const auto& v = acc(t);
    if (v.empty()) throw Error(Errc::ConfigError, path + " must not be empty");
    for (int x : v)
      if (!r.ok(x)) throw Error(Errc::ConfigError, path + ": value " + std::to_string(x) + " outside " + r.str());
  };
  return f;
}

#define ACC(expr) [](RunConfig& c) -> auto& { return c.expr; }

const std::vector<Field>& registry() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    Field sc{"scenario", "string", "", "which checks to run", {}, {}, {}};
    for (const auto& n : scenario_names()) sc.range += (sc.range.empty() ? "" : "|") + n;
    sc.set = [](RunConfig& c, const std::vector<std::string>& in) {
      if (in.size() != 1) throw Error(Errc::ConfigError, "scenario: expected one value");
      c.scenario = parse_scenario(in[0]);
    };
    sc.get = [](const RunConfig& c) { return to_string(c.scenario); };
    sc.check = [](const RunConfig&) {};
    f.push_back(sc);
    f.push_back(integer<std::uint64_t>("seed", ACC(seed), closed(0, HUGE_VAL), "seed of every random family"));
    Field od{"output_dir", "path", "non-empty", "artifact directory", {}, {}, {}};
    od.set = [](RunConfig& c, const std::vector<std::string>& in) {
      if (in.size() != 1) throw Error(Errc::ConfigError, "output_dir: expected one value");
      c.output_dir = in[0];
    };
    od.get = [](const RunConfig& c) { return c.output_dir; };
    od.check = [](const RunConfig& c) {
      if (c.output_dir.empty()) throw Error(Errc::ConfigError, "output_dir must not be empty");
    };
    f.push_back(od);

    f.push_back(choice("domain.kind", ACC(domain.kind), {"slab"}, "solver domain"));
    f.push_back(dbl("domain.L", ACC(domain.L), open(0, 100), "slab thickness"));
    f.push_back(dbl("domain.lateral", ACC(domain.lateral), open(0, 100), "lateral period"));
    f.push_back(dbl("domain.delta0", ACC(domain.delta0), open(0, 0.5), "boundary band width"));

    f.push_back(integer<int>("grid.n_x", ACC(grid.n_x), closed(1, 256), "lateral cells per direction"));
    f.push_back(integer<int>("grid.n_x3", ACC(grid.n_x3), closed(1, 256), "cells across the slab"));
    f.push_back(integer<int>("grid.n_v", ACC(grid.n_v), closed(4, 64), "velocity nodes per direction"));
    f.push_back(dbl("grid.v_max", ACC(grid.v_max), open(0, 20), "velocity box half width"));

    f.push_back(dbl_list("schedule.epsilon_list", ACC(schedule.epsilon_list), open(0, 0.5), "regularization parameters"));
    f.push_back(dbl_list("schedule.a_list", ACC(schedule.a_list), open(0, 1), "reflection damping values"));
    f.push_back(int_list("schedule.n_list", ACC(schedule.n_list), closed(1, 64), "reflection iterate counts"));
    f.push_back(dbl("schedule.T", ACC(schedule.T), open(0, 100), "final time"));
    f.push_back(dbl("schedule.fixed_point_tol", ACC(schedule.fixed_point_tol), open(0, 1e-3), "Picard tolerance"));
    f.push_back(integer<int>("schedule.picard_max", ACC(schedule.picard_max), closed(1, 100000), "Picard iteration cap"));
    f.push_back(dbl("schedule.window_fraction", ACC(schedule.window_fraction), open(0, 0.125), "window length / eps^2"));
    f.push_back(dbl("schedule.mismatch_tol", ACC(schedule.mismatch_tol), open(0, 1), "reflection sweep tolerance"));
    f.push_back(dbl("schedule.compat_delta", ACC(schedule.compat_delta), closed(0, 1), "adjoint compatibility radius (0: 4 eps^4)"));
    Field dm{"schedule.diffusion", "string", "A|B|iso", "velocity diffusion discretization", {}, {}, {}};
    dm.set = [](RunConfig& c, const std::vector<std::string>& in) {
      if (in.size() != 1) throw Error(Errc::ConfigError, "schedule.diffusion: expected one value");
      try {
        c.schedule.diffusion = parse_diffusion_mode(in[0]);
      } catch (const Error&) {
        throw Error(Errc::ConfigError, "schedule.diffusion = '" + in[0] + "' not one of A|B|iso");
      }
    };
    dm.get = [](const RunConfig& c) { return to_string(c.schedule.diffusion); };
    dm.check = [](const RunConfig&) {};
    f.push_back(dm);

    f.push_back(dbl("macro.epsilon", ACC(macro.epsilon), open(0, 0.5), "regularization of the macro runs"));
    f.push_back(dbl("macro.T", ACC(macro.T), open(0, 100), "macro run length"));
    f.push_back(integer<int>("macro.panels", ACC(macro.panels), closed(1, 1000), "Duhamel panels"));
    f.push_back(integer<int>("macro.n_x", ACC(macro.n_x), closed(2, 128), "coarse x cells per direction"));
    f.push_back(integer<int>("macro.n_v", ACC(macro.n_v), closed(4, 64), "velocity nodes per direction"));
    f.push_back(dbl("macro.v_max", ACC(macro.v_max), open(0, 20), "velocity box half width"));
    f.push_back(dbl("macro.safety", ACC(macro.safety), closed(1, 100), "factor on the fitted constant"));
    f.push_back(boolean("macro.refine", ACC(macro.refine), "also run the doubled x grid"));
    f.push_back(integer<int>("macro.coercivity_n_v", ACC(macro.coercivity_n_v), closed(8, 64), "spot-check velocity nodes"));
    f.push_back(dbl("macro.coercivity_v_max", ACC(macro.coercivity_v_max), open(0, 20), "spot-check velocity box"));
    f.push_back(integer<int>("macro.coercivity_samples", ACC(macro.coercivity_samples), closed(1, 1000), "random slices"));

    f.push_back(choice("flatten.patch", ACC(flatten.patch), {"flat", "tilted", "paraboloid", "saddle", "all"}, "chart geometry"));
    f.push_back(dbl("flatten.tilt", ACC(flatten.tilt), closed(-10, 10), "slope of the tilted plane"));
    f.push_back(integer<int>("flatten.samples", ACC(flatten.samples), closed(1, 10000000), "interface samples"));
    f.push_back(integer<int>("flatten.continuity_samples", ACC(flatten.continuity_samples), closed(1, 1000000), "straddling samples"));
    f.push_back(integer<int>("flatten.transport_samples", ACC(flatten.transport_samples), closed(1, 1000000), "chain-rule samples"));
    f.push_back(dbl("flatten.delta", ACC(flatten.delta), open(0, 0.1), "largest one-sided offset"));
    f.push_back(dbl("flatten.h", ACC(flatten.h), open(0, 0.1), "largest difference step"));

    f.push_back(integer<int>("duality.n_x", ACC(duality.n_x), closed(1, 128), "base lateral cells"));
    f.push_back(integer<int>("duality.n_x3", ACC(duality.n_x3), closed(1, 128), "base cells across the slab"));
    f.push_back(integer<int>("duality.n_v", ACC(duality.n_v), closed(4, 40), "base velocity nodes"));
    f.push_back(dbl("duality.v_max", ACC(duality.v_max), open(0, 20), "velocity box half width"));
    f.push_back(boolean("duality.refine", ACC(duality.refine), "run the halved grid too"));
    f.push_back(dbl("duality.floor", ACC(duality.floor), open(0, 1e-3), "converged residual level"));

    f.push_back(integer<int>("checks.jacobian_anchors", ACC(checks.jacobian_anchors), closed(1, 1000000), "random characteristic anchors"));
    f.push_back(integer<int>("checks.lipschitz_pairs", ACC(checks.lipschitz_pairs), closed(1, 10000), "random field pairs"));
    return f;
  }();
  return fields;
}

#undef ACC

}  // namespace

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::solve: return "solve";
    case Scenario::adjoint: return "adjoint";
    case Scenario::duality: return "duality";
    case Scenario::macro: return "macro";
    case Scenario::flatten: return "flatten";
    case Scenario::all: return "all";
  }
  return "?";
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> n{"solve", "adjoint", "duality", "macro", "flatten", "all"};
  return n;
}

Scenario parse_scenario(const std::string& s) {
  for (int i = 0; i < 6; ++i)
    if (scenario_names()[i] == s) return static_cast<Scenario>(i);
  throw Error(Errc::ConfigError, "scenario = '" + s + "' not one of solve|adjoint|duality|macro|flatten|all");
}

void RunConfig::validate() const {
  for (const auto& f : registry()) f.check(*this);
  for (double e : schedule.epsilon_list)
    if (grid.v_max * schedule.window_fraction * e * e >= domain.L)
      throw Error(Errc::ConfigError, "schedule.window_fraction: one window crosses the slab");
}

SolverSchedule RunConfig::solver_schedule() const {
  SolverSchedule s;
  s.epsilon_list = schedule.epsilon_list;
  s.a_list = schedule.a_list;
  s.n_max = *std::max_element(schedule.n_list.begin(), schedule.n_list.end());
  s.T = schedule.T;
  s.fixed_point_tol = schedule.fixed_point_tol;
  s.picard_max = schedule.picard_max;
  s.duhamel_panels = macro.panels;
  s.window_fraction = schedule.window_fraction;
  s.mismatch_tol = schedule.mismatch_tol;
  s.compat_delta = schedule.compat_delta;
  s.validate();
  return s;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(is);
  } catch (const std::exception& e) {
    throw Error(Errc::ConfigError, origin + ": " + e.what());
  }
  std::map<std::string, const Field*> by_path;
  for (const auto& f : registry()) by_path[f.path] = &f;
  RunConfig cfg;
  std::set<std::string> seen;
  for (const auto& it : items) {
    if (it.name == "++" || it.name == "--") continue;
    std::string path;
    for (const auto& p : it.parents) path += p + ".";
    path += it.name;
    auto f = by_path.find(path);
    if (f == by_path.end()) throw Error(Errc::ConfigError, path + ": unknown key in " + origin);
    if (!seen.insert(path).second) throw Error(Errc::ConfigError, path + ": given twice in " + origin);
    f->second->set(cfg, it.inputs);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out, section;
  for (const auto& f : registry()) {
    auto dot = f.path.find('.');
    std::string sec = dot == std::string::npos ? "" : f.path.substr(0, dot);
    std::string key = dot == std::string::npos ? f.path : f.path.substr(dot + 1);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

std::string config_hash(const RunConfig& cfg) {
  RunConfig c0 = cfg;
  c0.output_dir.clear();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize_config(c0)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<SchemaRow> config_schema() {
  RunConfig def;
  std::vector<SchemaRow> rows;
  for (const auto& f : registry()) rows.push_back({f.path, f.type, f.get(def), f.range, f.doc});
  return rows;
}

RunConfig profile_config(const std::string& profile) {
  RunConfig c;
  if (profile == "ci") return c;
  if (profile == "desk") {
    c.grid = {8, 9, 16, 8.0};
    c.schedule.T = 0.5;
    c.macro.n_x = 6;
    c.macro.n_v = 14;
    c.macro.v_max = 7.0;
    c.macro.T = 0.5;
    c.macro.panels = 8;
    c.macro.coercivity_n_v = 32;
    return c;
  }
  throw Error(Errc::ConfigError, "profile '" + profile + "' not one of ci|desk");
}

}  // namespace llab
