#include "llab/report.hpp"

#include "llab/common.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace llab {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string o = "\"";
  for (char c : s) o += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return o + "\"";
}

std::string num(double x, int prec = 4) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", prec, x);
  return buf;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

// margin of a record: positive inside the threshold
double slack(const PropertyRecord& r) {
  if (r.relation == "<=") return r.threshold - r.measured;
  if (r.relation == ">=") return r.measured - r.threshold;
  return 0.0;
}

}  // namespace

PropertyRecord& RunReport::add(const std::string& name, const std::string& anchor, double measured,
                               const std::string& relation, double threshold, const std::string& note) {
  PropertyRecord r{name, anchor, measured, threshold, relation, true, note};
  if (relation == "<=") r.pass = measured <= threshold;
  else if (relation == ">=") r.pass = measured >= threshold;
  else if (relation == "==") r.pass = measured == threshold;
  else r.pass = true;
  if (std::isnan(measured)) r.pass = relation == "info";
  records.push_back(r);
  return records.back();
}

void RunReport::check_unique() const {
  std::set<std::string> names;
  for (const auto& r : records)
    if (!names.insert(r.name).second) throw Error(Errc::MismatchedSuites, "duplicate property " + r.name);
}

bool RunReport::all_pass() const {
  return std::all_of(records.begin(), records.end(), [](const PropertyRecord& r) { return r.pass; });
}

std::string code_version() {
#ifdef LLAB_VERSION
  return LLAB_VERSION;
#else
  return "0.1.0";
#endif
}

std::string csv_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_csv(const std::string& path, const CsvTable& t) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << csv_text(t.header[i]);
  out << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_number(row[i]);
    out << "\n";
  }
  if (!out) throw Error(Errc::IoError, "write failed for " + path);
}

void write_records_csv(const std::string& path, const RunReport& r) {
  auto out = open_out(path);
  out << "name,anchor,relation,measured,threshold,pass,note\n";
  for (const auto& p : r.records)
    out << csv_text(p.name) << "," << csv_text(p.anchor) << "," << p.relation << ","
        << csv_number(p.measured) << "," << csv_number(p.threshold) << "," << (p.pass ? 1 : 0) << ","
        << csv_text(p.note) << "\n";
  if (!out) throw Error(Errc::IoError, "write failed for " + path);
}

void write_report_json(const std::string& path, const RunReport& r) {
  nlohmann::ordered_json j;
  j["scenario"] = r.scenario;
  j["config_hash"] = r.config_hash;
  j["code_version"] = r.code_version;
  j["wall_time"] = r.wall_time;
  j["all_pass"] = r.all_pass();
  auto& arr = j["records"] = nlohmann::ordered_json::array();
  for (const auto& p : r.records) {
    // nan/inf are not JSON numbers
    auto numj = [](double x) -> nlohmann::ordered_json {
      if (std::isfinite(x)) return x;
      return csv_number(x);
    };
    arr.push_back({{"name", p.name},
                   {"anchor", p.anchor},
                   {"relation", p.relation},
                   {"measured", numj(p.measured)},
                   {"threshold", numj(p.threshold)},
                   {"pass", p.pass},
                   {"note", p.note}});
  }
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

RunReport read_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot read report " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(Errc::IoError, path + ": " + e.what());
  }
  auto numv = [](const nlohmann::json& v) {
    if (v.is_number()) return v.get<double>();
    std::string s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  };
  RunReport r;
  try {
    r.scenario = j.at("scenario").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.code_version = j.at("code_version").get<std::string>();
    r.wall_time = j.at("wall_time").get<double>();
    for (const auto& p : j.at("records"))
      r.records.push_back({p.at("name").get<std::string>(), p.at("anchor").get<std::string>(),
                           numv(p.at("measured")), numv(p.at("threshold")),
                           p.at("relation").get<std::string>(), p.at("pass").get<bool>(),
                           p.at("note").get<std::string>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::IoError, path + ": malformed report: " + e.what());
  }
  return r;
}

std::vector<RecordDiff> compare_runs(const RunReport& a, const RunReport& b) {
  std::map<std::string, const PropertyRecord*> ma, mb;
  for (const auto& r : a.records) ma[r.name] = &r;
  for (const auto& r : b.records) mb[r.name] = &r;
  for (const auto& [k, v] : ma)
    if (!mb.count(k)) throw Error(Errc::MismatchedSuites, "property " + k + " missing from second report");
  for (const auto& [k, v] : mb)
    if (!ma.count(k)) throw Error(Errc::MismatchedSuites, "property " + k + " missing from first report");
  std::vector<RecordDiff> out;
  for (const auto& ra : a.records) {
    const auto& rb = *mb[ra.name];
    bool same = ra.measured == rb.measured || (std::isnan(ra.measured) && std::isnan(rb.measured));
    if (same && ra.pass == rb.pass) continue;
    RecordDiff d{ra.name, ra.measured, rb.measured, rb.measured - ra.measured, 0, ra.pass, rb.pass};
    if (ra.relation != "info") {
      double sa = slack(ra), sb = slack(rb);
      d.direction = sb > sa ? 1 : (sb < sa ? -1 : 0);
    }
    out.push_back(d);
  }
  return out;
}

void write_svg_lines(const std::string& path, const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, const std::vector<SvgSeries>& series, bool log_y) {
  const double W = 640, H = 400, L = 70, R = 150, T = 40, B = 50;
  double x0 = HUGE_VAL, x1 = -HUGE_VAL, y0 = HUGE_VAL, y1 = -HUGE_VAL;
  auto tr = [&](double y) { return log_y ? std::log10(std::abs(y)) : y; };
  auto usable = [&](double y) { return std::isfinite(y) && (!log_y || y != 0.0); };
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!usable(s.y[i]) || !std::isfinite(s.x[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, tr(s.y[i]));
      y1 = std::max(y1, tr(s.y[i]));
    }
  if (!(x0 < HUGE_VAL)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    double xv = x0 + k * (x1 - x0) / 4, yv = y0 + k * (y1 - y0) / 4;
    o << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 15 << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
    std::string yl = log_y ? "1e" + num(yv, 3) : num(yv);
    o << "<text x=\"" << L - 5 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << yl << "</text>\n";
    o << "<line x1=\"" << L << "\" x2=\"" << W - R << "\" y1=\"" << py(yv) << "\" y2=\"" << py(yv)
      << "\" stroke=\"#ddd\"/>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xml_escape(xlabel) << "</text>\n";
  o << "<text transform=\"translate(15," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << xml_escape(log_y ? "log10 " + ylabel : ylabel) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* col = kColors[s % 7];
    std::string pts;
    for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size(); ++i) {
      if (!usable(series[s].y[i])) continue;
      pts += num(px(series[s].x[i]), 6) + "," + num(py(tr(series[s].y[i])), 6) + " ";
    }
    o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"" << pts << "\"/>\n";
    o << "<line x1=\"" << W - R + 10 << "\" x2=\"" << W - R + 30 << "\" y1=\"" << T + 10 + 16 * s
      << "\" y2=\"" << T + 10 + 16 * s << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << W - R + 35 << "\" y=\"" << T + 14 + 16 * s << "\">" << xml_escape(series[s].label) << "</text>\n";
  }
  o << "</svg>\n";
  auto out = open_out(path);
  out << o.str();
}

void write_svg_bars(const std::string& path, const std::string& title,
                    const std::vector<std::string>& labels, const std::vector<double>& values) {
  const double W = 640, L = 260, R = 60, T = 40, row = 18;
  const double H = T + row * labels.size() + 40;
  std::vector<double> lg;
  for (double v : values) lg.push_back(v > 0 && std::isfinite(v) ? std::log10(v) : -17.0);
  double lo = -17.0, hi = 1.0;
  for (double v : lg) hi = std::max(hi, std::ceil(v));
  auto px = [&](double v) { return L + (v - lo) / (hi - lo) * (W - L - R); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double y = T + row * i;
    o << "<text x=\"" << L - 5 << "\" y=\"" << y + 12 << "\" text-anchor=\"end\">" << xml_escape(labels[i]) << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << y + 2 << "\" width=\"" << std::max(0.0, px(lg[i]) - L)
      << "\" height=\"" << row - 4 << "\" fill=\"" << kColors[i % 7] << "\"/>\n";
    o << "<text x=\"" << px(lg[i]) + 3 << "\" y=\"" << y + 12 << "\">" << num(values[i], 3) << "</text>\n";
  }
  double ya = T + row * labels.size() + 15;
  for (double v = lo; v <= hi; v += 3)
    o << "<text x=\"" << px(v) << "\" y=\"" << ya << "\" text-anchor=\"middle\">1e" << num(v) << "</text>\n";
  o << "</svg>\n";
  auto out = open_out(path);
  out << o.str();
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw Error(Errc::IoError, "cannot create output directory " + dir + (ec ? ": " + ec.message() : ""));
}

}  // namespace llab
