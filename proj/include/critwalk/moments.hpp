#pragma once

// Moments of the canonical measure of super-Brownian motion, evaluated from
// their binary-branching integral recursion, and the moments of the total
// mass Z of the conditioned process up to time 1.

#include <cstdint>
#include <vector>

namespace critwalk {

struct MomentQuery {
  int r = 1;              // number of legs
  std::vector<double> s;  // r positive times
  double grid = 1e-3;     // quadrature step h <= min(s) / 4
};

/// Largest supported r.
inline constexpr int kMaxMomentLegs = 8;

/// M^(r)(s_1..s_r) by trapezoid quadrature of the recursion with one
/// Richardson step (h, h/2). The grid has a breakpoint at every s_i, where
/// the integrands have kinks, and is uniform between breakpoints.
double m_hat(const MomentQuery& q);

/// Closed form at equal times: t^(r-1) 2^-(r-1) r!.
double m_hat_closed_equal(int r, double t);

struct ZMoment {
  int l = 1;
  double value = 0.0;
  double bound = 0.0;     // 2^-l (l+1)!
  double richardson_gap = 0.0;
};

/// E Z^l for 1 <= l <= 5. M^(l+1)(1, t) is symmetric in t and polynomial on
/// each ordering of t, so the cube integral is l! times a simplex integral,
/// done by tensor Gauss-Legendre. Each integrand value uses trapezoid steps
/// h, h/2, h/4; the two Richardson estimates must agree to `tolerance` or
/// std::runtime_error is thrown. Throws std::logic_error if the value exceeds
/// the bound.
ZMoment z_moment(int l, double grid = 1e-3, double tolerance = 1e-7);

}  // namespace critwalk
