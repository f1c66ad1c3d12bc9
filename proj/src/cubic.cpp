#include "admmpc/cubic.hpp"

#include <algorithm>
#include <cmath>

namespace admmpc {

namespace {

constexpr double kDegenerate = 1e-13;   // relative cutoff for vanishing leading terms
constexpr double kPi = 3.14159265358979323846;

double horner(double c3, double c2, double c1, double c0, double u) {
  return ((c3 * u + c2) * u + c1) * u + c0;
}

// guarded Newton polishing; each step is kept only if it reduces |p|
double polish(double c3, double c2, double c1, double c0, double r) {
  for (int step = 0; step < 3; ++step) {
    const double p = horner(c3, c2, c1, c0, r);
    if (p == 0.0) return r;
    const double dp = (3.0 * c3 * r + 2.0 * c2) * r + c1;
    if (dp == 0.0 || !std::isfinite(dp)) return r;
    const double r2 = r - p / dp;
    if (!std::isfinite(r2) || std::abs(horner(c3, c2, c1, c0, r2)) >= std::abs(p)) return r;
    r = r2;
  }
  return r;
}

void push(CubicRoots& out, double r) {
  for (int i = 0; i < out.count; ++i)
    if (out.r[i] == r) return;
  out.r[out.count++] = r;
}

// stable quadratic formula; no roots on negative discriminant
void quadratic_roots(double a, double b, double c, CubicRoots& out) {
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return;
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  if (q != 0.0) {
    push(out, q / a);
    if (c != 0.0) push(out, c / q);
    else push(out, 0.0);
  } else {
    push(out, 0.0);   // b == 0 and disc == 0: double root at zero
  }
}

}  // namespace

CubicRoots cubic_real_roots(double c3, double c2, double c1, double c0) {
  CubicRoots out;
  const double scale =
      std::max(std::max(std::abs(c3), std::abs(c2)), std::max(std::abs(c1), std::abs(c0)));
  if (scale == 0.0) {
    out.identically_zero = true;
    return out;
  }

  if (std::abs(c3) <= kDegenerate * scale) {
    if (std::abs(c2) <= kDegenerate * scale) {
      if (std::abs(c1) <= kDegenerate * scale) return out;   // nonzero constant: no roots
      push(out, -c0 / c1);
    } else {
      quadratic_roots(c2, c1, c0, out);
    }
  } else if (c0 == 0.0) {
    // exact zero constant term: deflate u = 0 exactly, keep the quotient's roots
    push(out, 0.0);
    quadratic_roots(c3, c2, c1, out);
  } else {
    // monic depressed-cubic reduction (Cardano / trigonometric by discriminant)
    const double a = c2 / c3;
    const double b = c1 / c3;
    const double c = c0 / c3;
    const double q = (a * a - 3.0 * b) / 9.0;
    const double r = (a * (2.0 * a * a - 9.0 * b) + 27.0 * c) / 54.0;
    const double r2 = r * r;
    const double q3 = q * q * q;
    if (r2 < q3) {
      // three distinct real roots
      const double t = std::acos(std::clamp(r / std::sqrt(q3), -1.0, 1.0));
      const double fac = -2.0 * std::sqrt(q);
      push(out, fac * std::cos(t / 3.0) - a / 3.0);
      push(out, fac * std::cos((t + 2.0 * kPi) / 3.0) - a / 3.0);
      push(out, fac * std::cos((t - 2.0 * kPi) / 3.0) - a / 3.0);
    } else {
      const double big = -std::copysign(std::cbrt(std::abs(r) + std::sqrt(r2 - q3)), r);
      const double small = (big != 0.0) ? q / big : 0.0;
      push(out, big + small - a / 3.0);
      // boundary discriminant: the conjugate pair collapses onto a real double root
      const double imag = 0.5 * std::sqrt(3.0) * (big - small);
      if (std::abs(imag) <= 1e-10 * std::max(1.0, std::abs(big) + std::abs(small)))
        push(out, -0.5 * (big + small) - a / 3.0);
    }
  }

  for (int i = 0; i < out.count; ++i) out.r[i] = polish(c3, c2, c1, c0, out.r[i]);
  std::sort(out.r.begin(), out.r.begin() + out.count);
  return out;
}

}  // namespace admmpc
