#include "critwalk/moments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "critwalk/errors.hpp"

namespace critwalk {

namespace {

constexpr std::size_t kMaxTableEntries = 10'000'000;

// F_S(u) = M^(|S|)(s_S - u) on grid points u <= min s_S, for every nonempty
// subset S of the legs. F_S(u) = int_u^{min s_S} sum_I F_I F_{S\I}, the sum
// running over nonempty I not containing the first leg of S.
double trapezoid(const std::vector<double>& s, double h, int refine) {
  const int r = static_cast<int>(s.size());
  if (r == 1) return 1.0;

  std::vector<double> breaks{0.0};
  breaks.insert(breaks.end(), s.begin(), s.end());
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  std::vector<double> grid{0.0};
  std::vector<std::size_t> break_index{0};
  for (std::size_t j = 1; j < breaks.size(); ++j) {
    const double a = breaks[j - 1], w = breaks[j] - a;
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(w / h))) << refine;
    for (std::size_t k = 1; k < steps; ++k)
      grid.push_back(a + w * static_cast<double>(k) / static_cast<double>(steps));
    grid.push_back(breaks[j]);
    break_index.push_back(grid.size() - 1);
  }
  auto index_of = [&](double t) {
    const auto j = std::lower_bound(breaks.begin(), breaks.end(), t) - breaks.begin();
    return break_index[static_cast<std::size_t>(j)];
  };

  const unsigned full = (1u << r) - 1;
  std::vector<std::size_t> top(full + 1, 0);
  std::size_t entries = 0;
  for (unsigned m = 1; m <= full; ++m) {
    double lo = INFINITY;
    for (int i = 0; i < r; ++i)
      if (m >> i & 1u) lo = std::min(lo, s[i]);
    top[m] = index_of(lo);
    entries += top[m] + 1;
  }
  if (entries > kMaxTableEntries)
    throw BudgetExceeded("moment table of " + std::to_string(entries) +
                         " entries exceeds the cache bound; use a coarser grid");

  std::vector<std::vector<double>> f(full + 1);
  std::vector<unsigned> order;
  for (unsigned m = 1; m <= full; ++m) order.push_back(m);
  std::stable_sort(order.begin(), order.end(),
                   [](unsigned a, unsigned b) { return std::popcount(a) < std::popcount(b); });
  std::vector<double> integrand;
  for (unsigned m : order) {
    const std::size_t n = top[m] + 1;
    if (std::popcount(m) == 1) {
      f[m].assign(n, 1.0);
      continue;
    }
    const unsigned first = m & (~m + 1);
    const unsigned rest = m ^ first;
    integrand.assign(n, 0.0);
    for (unsigned sub = rest; sub != 0; sub = (sub - 1) & rest) {
      const auto& a = f[sub];
      const auto& b = f[m ^ sub];
      for (std::size_t k = 0; k < n; ++k) integrand[k] += a[k] * b[k];
    }
    auto& out = f[m];
    out.assign(n, 0.0);
    for (std::size_t k = n - 1; k-- > 0;)
      out[k] = out[k + 1] + 0.5 * (grid[k + 1] - grid[k]) * (integrand[k] + integrand[k + 1]);
  }
  return f[full][0];
}

void validate(const MomentQuery& q) {
  if (q.r < 1 || q.r > kMaxMomentLegs)
    throw InvalidArgument("r must lie in [1, " + std::to_string(kMaxMomentLegs) + "]");
  if (static_cast<int>(q.s.size()) != q.r) throw InvalidArgument("s must have r entries");
  for (double t : q.s)
    if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("times must be positive and finite");
  if (!(q.grid > 0.0)) throw InvalidArgument("grid step must be positive");
  const double lo = *std::min_element(q.s.begin(), q.s.end());
  if (q.grid > lo / 4.0)
    throw InvalidArgument("grid step " + std::to_string(q.grid) + " too coarse; need h <= min(s)/4 = " +
                          std::to_string(lo / 4.0));
}

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

// Gauss-Legendre nodes and weights on [0, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = 0.5 * (1.0 - z);
    w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

}  // namespace

double m_hat(const MomentQuery& q) {
  validate(q);
  if (q.r == 1) return 1.0;
  const double coarse = trapezoid(q.s, q.grid, 0);
  const double fine = trapezoid(q.s, q.grid, 1);
  return (4.0 * fine - coarse) / 3.0;
}

double m_hat_closed_equal(int r, double t) {
  if (r < 1) throw InvalidArgument("r must be >= 1");
  if (!(t > 0.0)) throw InvalidArgument("t must be positive");
  return std::pow(t / 2.0, r - 1) * factorial(r);
}

ZMoment z_moment(int l, double grid, double tolerance) {
  if (l < 1 || l > 5) throw InvalidArgument("l must lie in [1, 5]");
  if (!(grid > 0.0) || grid > 0.25) throw InvalidArgument("grid step must lie in (0, 1/4]");
  const auto [nodes, weights] = gauss_legendre(l);
  const int n = l;

  double z1 = 0.0, z2 = 0.0;
  std::vector<int> digit(l, 0);
  std::vector<double> s(l + 1);
  for (;;) {
    // Simplex 0 < t_1 < ... < t_l < 1 via t_l = u_l, t_k = t_{k+1} u_k.
    double t = 1.0, weight = 1.0, jacobian = 1.0;
    s[0] = 1.0;
    for (int k = l - 1; k >= 0; --k) {
      if (k < l - 1) jacobian *= t;
      t *= nodes[digit[k]];
      weight *= weights[digit[k]];
      s[k + 1] = t;
    }
    const double w = weight * jacobian;
    const double t0 = trapezoid(s, grid, 0);
    const double t1 = trapezoid(s, grid, 1);
    const double t2 = trapezoid(s, grid, 2);
    z1 += w * (4.0 * t1 - t0) / 3.0;
    z2 += w * (4.0 * t2 - t1) / 3.0;

    int k = 0;
    while (k < l && ++digit[k] == n) digit[k++] = 0;
    if (k == l) break;
  }
  const double scale = factorial(l);
  ZMoment out;
  out.l = l;
  out.value = scale * z2;
  out.richardson_gap = scale * std::abs(z2 - z1);
  out.bound = std::ldexp(factorial(l + 1), -l);
  if (out.richardson_gap > tolerance)
    throw std::runtime_error("z_moment(" + std::to_string(l) +
                             ") quadrature did not converge under grid refinement (gap " +
                             std::to_string(out.richardson_gap) + ")");
  if (out.value > out.bound * (1.0 + 1e-9))
    throw std::logic_error("z_moment exceeds its moment bound");
  return out;
}

}  // namespace critwalk
