#pragma once

#include <array>

namespace admmpc {

/// Real roots of c3 u^3 + c2 u^2 + c1 u + c0, sorted ascending. Repeated real
/// roots are reported once per distinct value. Degenerate leading coefficients
/// fall through to the quadratic/linear/constant cases; a coefficient is
/// treated as zero when |c| <= 1e-13 * max|c_i| (roots beyond ~1e13 in
/// magnitude are outside any use here). The identically-zero polynomial sets
/// identically_zero instead of listing roots.
///
/// Roots are Newton-polished: |p(r)| <= 1e-9 * max(1, max|c_i|) for roots of
/// order one, degrading with |r|^3 beyond that (the evaluation noise floor of
/// the polynomial itself). An exact zero constant term yields an exact zero
/// root.
struct CubicRoots {
  std::array<double, 3> r{};
  int count = 0;
  bool identically_zero = false;
};

CubicRoots cubic_real_roots(double c3, double c2, double c1, double c0);

}  // namespace admmpc
