#include "llab/quadrature.hpp"

#include "llab/common.hpp"

#include <map>
#include <mutex>

namespace llab {

namespace {

Rule1d compute_gl(int n) {
  Rule1d r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return r;
}

}  // namespace

Rule1d gauss_legendre(int n) {
  if (n < 1) throw Error(Errc::OutOfRange, "quadrature order must be positive");
  static std::mutex m;
  static std::map<int, Rule1d> cache;
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  return cache[n] = compute_gl(n);
}

Rule1d gauss_legendre(int n, double a, double b) {
  Rule1d r = gauss_legendre(n);
  double h = 0.5 * (b - a), c = 0.5 * (a + b);
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    r.x[i] = c + h * r.x[i];
    r.w[i] *= h;
  }
  return r;
}

}  // namespace llab
