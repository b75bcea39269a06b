#include "llab/common.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <thread>
#include <vector>

namespace llab {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::DegenerateGradient: return "DegenerateGradient";
    case Errc::NotOnBoundary: return "NotOnBoundary";
    case Errc::ChartMiss: return "ChartMiss";
    case Errc::OutsideDomain: return "OutsideDomain";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::SingularPoint: return "SingularPoint";
    case Errc::QuadratureFail: return "QuadratureFail";
    case Errc::StepCollapse: return "StepCollapse";
    case Errc::ContractionGuard: return "ContractionGuard";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::CompatibilityViolation: return "CompatibilityViolation";
    case Errc::SolvabilityViolation: return "SolvabilityViolation";
    case Errc::ChartDegenerate: return "ChartDegenerate";
    case Errc::SpecularViolation: return "SpecularViolation";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
    case Errc::MismatchedSuites: return "MismatchedSuites";
  }
  return "Unknown";
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

int thread_count() {
  static const int n = [] {
    const char* s = std::getenv("LLAB_THREADS");
    if (!s) return 1;
    int v = std::atoi(s);
    return std::clamp(v, 1, 256);
  }();
  return n;
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body) {
  int nt = thread_count();
  if (nt <= 1 || n < 2 * nt) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nt);
  std::int64_t chunk = (n + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    std::int64_t lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::int64_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

}  // namespace llab
