#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace llab {

template <class Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <class Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;

inline constexpr double kPi = 3.14159265358979323846;

enum class Errc {
  DegenerateGradient,
  NotOnBoundary,
  ChartMiss,
  OutsideDomain,
  OutOfRange,
  SingularPoint,
  QuadratureFail,
  StepCollapse,
  ContractionGuard,
  NoConvergence,
  CompatibilityViolation,
  SolvabilityViolation,
  ChartDegenerate,
  SpecularViolation,
  ConfigError,
  IoError,
  MismatchedSuites,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Short %.3e rendering for messages.
std::string sci(double x);

/// Number of worker threads, from LLAB_THREADS (default 1).
int thread_count();

/// Runs body(i) for i in [0, n). Work is split in contiguous blocks so results
/// do not depend on the thread count.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body);

/// Sum in a fixed pairwise order; used for every reported reduction.
double pairwise_sum(const double* x, std::size_t n);

}  // namespace llab
