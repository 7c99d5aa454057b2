#pragma once

#include "gsax/gp.hpp"

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace gsax {

struct Benchmark {
  std::string name;
  Bounds bounds;
  std::function<double(const Vector&)> evaluate;
  Vector analytic_sobol;
  double analytic_total_var = 0.0;
  Vector analytic_main_vars;

  std::size_t dim() const { return bounds.dim(); }
};

/// y = x1 exp(-x1^2 - x2^2) on [-2, b]^2, b in {2, 6}.
Benchmark square_exponential(double b_upper);
/// sin x1 + 7 sin^2 x2 + 0.1 x3^4 sin x1 on [-pi, pi]^3.
Benchmark ishigami();
/// prod_k (|4 x_k - 2| + k) / (k + 1) on [0, 1]^5.
Benchmark g_function();
/// prod_k exp(-x_k^2 / a_k) on [-3, 3]^15.
Benchmark gaussian15();

/// Registry lookup: sqexp2, sqexp6, ishigami, gfunction, gaussian15.
Benchmark make_benchmark(std::string_view name);
const std::vector<std::string_view>& benchmark_names();

/// Error in S = A / Y when A and Y carry absolute errors dA and dY.
/// Case 1: both under, 2: both over, 3: A over and Y under, 4: A under and Y over.
double ratio_error(double s, double y, double d_a, double d_y, int error_case);

/// ratio_error at every (d_a[r], d_y[c]).
Matrix ratio_error_surface(double s, double y, const Vector& d_a, const Vector& d_y,
                           int error_case);

}  // namespace gsax
