#include <doctest.h>

#include "critwalk/errors.hpp"
#include "critwalk/moments.hpp"
#include "critwalk/rng.hpp"
#include "oracles.hpp"

using namespace critwalk;

TEST_CASE("low-order moments") {
  CHECK(m_hat({1, {0.7}}) == 1.0);
  CHECK(m_hat({2, {0.3, 0.8}}) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(m_hat({2, {1.0, 1.0}}) == doctest::Approx(1.0).epsilon(1e-12));
  // three legs: int_0^m (s_13 + s_12 + s_23 - 3u) du with pairwise minima
  CHECK(m_hat({3, {1.0, 2.0, 3.0}}) == doctest::Approx(1 + 1 + 2 - 1.5).epsilon(1e-10));
  CHECK(oracle::moment_exact({1.0, 2.0, 3.0}) == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("closed form at equal times") {
  CHECK(m_hat_closed_equal(1, 3.0) == 1.0);
  CHECK(m_hat_closed_equal(2, 3.0) == 3.0);
  CHECK(m_hat_closed_equal(3, 1.0) == 1.5);
  for (int r = 1; r <= 6; ++r)
    for (double t : {0.25, 1.0, 2.0}) {
      const std::vector<double> s(r, t);
      CHECK(oracle::moment_exact(s) == doctest::Approx(m_hat_closed_equal(r, t)).epsilon(1e-12));
      CHECK(m_hat({r, s}) == doctest::Approx(m_hat_closed_equal(r, t)).epsilon(1e-5));
    }
}

TEST_CASE("quadrature matches the exact recursion at unequal times") {
  CounterRng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const int r = 2 + static_cast<int>(rng.below(4));
    std::vector<double> s(r);
    for (double& x : s) x = 0.2 + 1.8 * rng.uniform();
    const double exact = oracle::moment_exact(s);
    CHECK(m_hat({r, s, 0.01}) == doctest::Approx(exact).epsilon(1e-6));
  }
}

TEST_CASE("symmetry, scaling and monotonicity") {
  CounterRng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int r = 3 + static_cast<int>(rng.below(3));
    std::vector<double> s(r);
    for (double& x : s) x = 0.5 + rng.uniform();
    const double base = m_hat({r, s, 0.01});
    auto perm = s;
    std::reverse(perm.begin(), perm.end());
    std::rotate(perm.begin(), perm.begin() + 1, perm.end());
    CHECK(m_hat({r, perm, 0.01}) == doctest::Approx(base).epsilon(1e-9));
    auto twice = s;
    for (double& x : twice) x *= 2.0;
    CHECK(oracle::moment_exact(twice) ==
          doctest::Approx(std::pow(2.0, r - 1) * oracle::moment_exact(s)).epsilon(1e-12));
  }
  int pairs = 0;
  while (pairs < 500) {
    const int r = 2 + static_cast<int>(rng.below(4));
    std::vector<double> s(r);
    for (double& x : s) x = 0.25 + rng.uniform();
    auto bigger = s;
    bigger[rng.below(static_cast<std::uint64_t>(r))] += 0.5 * rng.uniform();
    CHECK(m_hat({r, s, 0.02}) <= m_hat({r, bigger, 0.02}) + 1e-9);
    ++pairs;
  }
}

TEST_CASE("moment input validation") {
  CHECK_THROWS_AS(m_hat({0, {}}), InvalidArgument);
  CHECK_THROWS_AS(m_hat({kMaxMomentLegs + 1, std::vector<double>(kMaxMomentLegs + 1, 1.0)}),
                  InvalidArgument);
  CHECK_THROWS_AS(m_hat({2, {1.0}}), InvalidArgument);
  CHECK_THROWS_AS(m_hat({2, {1.0, -1.0}}), InvalidArgument);
  CHECK_THROWS_AS(m_hat({2, {0.01, 1.0}, 0.01}), InvalidArgument);
  CHECK_NOTHROW(m_hat({2, {0.04, 1.0}, 0.01}));
  CHECK_THROWS_AS(m_hat({8, std::vector<double>(8, 1.0), 1e-5}), BudgetExceeded);
}

TEST_CASE("moments of the total mass") {
  const auto z1 = z_moment(1);
  CHECK(z1.value == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(z1.bound == 1.0);
  // hand integration over 0 < t1 < t2 < 1 of t1 t2 + t1^2 / 2, times 2!
  CHECK(oracle::z_moment_exact(2) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  // frozen from the exact oracle
  const double frozen[] = {1.0 / 2, 1.0 / 3, 17.0 / 60, 31.0 / 105, 691.0 / 1890};
  for (int l = 1; l <= 5; ++l)
    CHECK(oracle::z_moment_exact(l) == doctest::Approx(frozen[l - 1]).epsilon(1e-13));
  for (int l = 1; l <= 5; ++l) {
    const auto z = z_moment(l);
    const double exact = oracle::z_moment_exact(l);
    MESSAGE("E Z^" << l << " = " << z.value << " (exact " << exact << ", bound " << z.bound << ")");
    CHECK(z.value == doctest::Approx(exact).epsilon(1e-7));
    CHECK(z.value <= z.bound);
    CHECK(z.richardson_gap <= 1e-7);
  }
  CHECK_THROWS_AS(z_moment(0), InvalidArgument);
  CHECK_THROWS_AS(z_moment(6), InvalidArgument);
}
