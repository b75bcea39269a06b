#pragma once

#include <string>
#include <vector>

namespace llab {

struct PropertyRecord {
  std::string name;
  /// Short label of the property being checked.
  std::string anchor;
  double measured = 0.0;
  double threshold = 0.0;
  /// "<=", ">=" or "info" (reported, not asserted).
  std::string relation = "<=";
  bool pass = true;
  std::string note;
};

struct RunReport {
  std::string scenario;
  std::string config_hash;
  std::string code_version;
  double wall_time = 0.0;
  std::vector<PropertyRecord> records;

  /// Adds a record; pass is derived from the relation.
  PropertyRecord& add(const std::string& name, const std::string& anchor, double measured,
                      const std::string& relation, double threshold, const std::string& note = "");
  /// Throws MismatchedSuites if the name is already present.
  void check_unique() const;
  bool all_pass() const;
};

std::string code_version();

/// Full-precision decimal text for CSV cells.
std::string csv_number(double x);

/// One header row, fixed column order.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void write_csv(const std::string& path, const CsvTable& t);
/// Records table: name, anchor, relation, measured, threshold, pass, note.
void write_records_csv(const std::string& path, const RunReport& r);
/// Whole report as JSON (records and provenance).
void write_report_json(const std::string& path, const RunReport& r);
RunReport read_report_json(const std::string& path);

struct RecordDiff {
  std::string name;
  double a = 0.0, b = 0.0;
  /// b - a.
  double delta = 0.0;
  /// +1 when b is further inside its threshold than a, -1 when worse, 0 for info records.
  int direction = 0;
  bool pass_a = true, pass_b = true;
};

/// Records whose measured values differ. Throws MismatchedSuites when the
/// property name sets differ.
std::vector<RecordDiff> compare_runs(const RunReport& a, const RunReport& b);

struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
};

/// Line plot written natively. log_y plots log10 of |y| (non-positive values dropped).
void write_svg_lines(const std::string& path, const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, const std::vector<SvgSeries>& series,
                     bool log_y = false);
/// Horizontal bars of log10 values, one per label (interface residual summaries).
void write_svg_bars(const std::string& path, const std::string& title,
                    const std::vector<std::string>& labels, const std::vector<double>& values);

/// Creates the directory (and parents); IoError on failure.
void ensure_directory(const std::string& dir);

}  // namespace llab
