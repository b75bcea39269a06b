#pragma once

#include <vector>

namespace llab {

struct Rule1d {
  std::vector<double> x;
  std::vector<double> w;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
Rule1d gauss_legendre(int n);

/// Same rule mapped to [a, b].
Rule1d gauss_legendre(int n, double a, double b);

}  // namespace llab
