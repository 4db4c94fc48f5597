#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>

#include "stt/integrate.hpp"
#include "stt/numerics.hpp"
#include "stt/sif.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("smooth minimum of equal entries undershoots by ln(n)/nu") {
  const std::array<double, 2> v{0.7, 0.7};
  REQUIRE_THAT(stt::smooth_min(v, 10.0), WithinAbs(0.6306852819440054, 1e-15));
}

TEST_CASE("smooth minimum tracks a dominant minimum") {
  const std::array<double, 2> v{1.0, 100.0};
  // The far entry contributes exp(-990); indistinguishable from 1 in doubles.
  REQUIRE_THAT(stt::smooth_min(v, 10.0), WithinAbs(1.0, 1e-15));
}

TEST_CASE("smooth minimum is shift robust") {
  // Naive exp(-nu * v) would under/overflow at these magnitudes; the max-shift
  // form must give min - ln2/nu regardless of the offset.
  for (double off : {0.0, 1000.0, -1000.0, 1e6}) {
    const std::array<double, 2> v{off + 0.5, off + 0.5};
    const double got = stt::smooth_min(v, 10.0);
    REQUIRE(std::isfinite(got));
    REQUIRE_THAT(got - (off + 0.5), WithinAbs(-std::log(2.0) / 10.0, 1e-9));
  }
}

TEST_CASE("smooth minimum drops infinite entries") {
  const std::array<double, 3> v{stt::k_inf, 2.0, stt::k_inf};
  REQUIRE_THAT(stt::smooth_min(v, 10.0), WithinAbs(2.0, 1e-15));
  const std::array<double, 2> all_inf{stt::k_inf, stt::k_inf};
  REQUIRE(stt::smooth_min(all_inf, 10.0) == stt::k_inf);
}

TEST_CASE("smooth minimum never exceeds the true minimum") {
  const std::array<double, 3> v{0.31, 0.3, 0.35};
  const double got = stt::smooth_min(v, 20.0);
  REQUIRE(got < 0.3);
  REQUIRE(got > 0.3 - std::log(3.0) / 20.0 - 1e-12);
}

TEST_CASE("radius closed form with all three terms equal") {
  REQUIRE_THAT(stt::radius_closed_form(0.5, 0.5, 0.5, 10.0),
               WithinAbs(0.390138771133189, 1e-15));
}

TEST_CASE("radius closed form equals rho_max when both clearances are empty") {
  REQUIRE(stt::radius_closed_form(stt::k_inf, stt::k_inf, 0.9, 10.0) == 0.9);
}

TEST_CASE("radius closed form stays strictly below every argument") {
  const double r = stt::radius_closed_form(0.8, 1.1, 0.9, 10.0);
  REQUIRE(r < 0.8);
  REQUIRE(r < 0.9);
  const double r2 = stt::radius_closed_form(0.8, stt::k_inf, 0.9, 10.0);
  REQUIRE(r2 < 0.8);
  REQUIRE(r2 > r);
}

TEST_CASE("radius lower bound reference values") {
  REQUIRE_THAT(stt::radius_lower_bound(0.6, 0.9, 10.0),
               WithinAbs(0.5282264081333297, 1e-15));
  REQUIRE_THAT(stt::radius_lower_bound(0.6, 0.9, 20.0),
               WithinAbs(0.5652807105372136, 1e-15));
  REQUIRE_THAT(stt::radius_lower_bound(0.3, 0.5, 10.0),
               WithinAbs(0.22413763243204865, 1e-15));
  REQUIRE_THAT(stt::radius_lower_bound(0.21, 0.27, 10.0),
               WithinAbs(0.1164372774514259, 1e-15));
}

TEST_CASE("radius lower bound holds whenever clearances respect rho_min") {
  const double rho_min = 0.3, rho_max = 0.5, nu = 10.0;
  const double bound = stt::radius_lower_bound(rho_min, rho_max, nu);
  for (double d1 : {0.3, 0.31, 0.5, 2.0, stt::k_inf}) {
    for (double d2 : {0.300001, 0.4, 1.0, stt::k_inf}) {
      REQUIRE(stt::radius_closed_form(d1, d2, rho_max, nu) >= bound);
    }
  }
}

TEST_CASE("radius rate form matches a finite difference of the closed form") {
  const double rho_max = 0.5, nu = 10.0;
  const double d1 = 0.7, r1 = 0.3, d2 = 0.45, r2 = -0.2;
  const double h = 1e-6;
  const double fd = (stt::radius_closed_form(d1 + h * r1, d2 + h * r2, rho_max, nu) -
                     stt::radius_closed_form(d1 - h * r1, d2 - h * r2, rho_max, nu)) /
                    (2.0 * h);
  REQUIRE_THAT(stt::radius_rate_form(d1, r1, d2, r2, rho_max, nu), WithinRel(fd, 1e-8));
}

TEST_CASE("radius rate form ignores an infinite clearance") {
  // d1 empty: only d2 moves the radius.
  const double got = stt::radius_rate_form(stt::k_inf, 123.0, 0.45, -0.2, 0.5, 10.0);
  const double h = 1e-6;
  const double fd = (stt::radius_closed_form(stt::k_inf, 0.45 - 0.2 * h, 0.5, 10.0) -
                     stt::radius_closed_form(stt::k_inf, 0.45 + 0.2 * h, 0.5, 10.0)) /
                    (2.0 * h);
  REQUIRE_THAT(got, WithinRel(fd, 1e-8));
}

namespace {
// d/dt x = x, scalar.
void exp_rhs(double, std::span<const double> x, std::span<double> dx) { dx[0] = x[0]; }
}  // namespace

TEST_CASE("one RK4 step reproduces the fourth-order Taylor series") {
  stt::Vec x{1.0};
  stt::RkWork w;
  stt::rk4_step([](double t, std::span<const double> x, std::span<double> dx) { exp_rhs(t, x, dx); },
                0.0, 0.1, x, w);
  REQUIRE_THAT(x[0], WithinAbs(1.1051708333333332, 1e-15));
  REQUIRE_THAT(x[0], WithinAbs(std::exp(0.1), 1e-7));
}

TEST_CASE("RK4 integrates a decay over many steps to near machine accuracy") {
  stt::Vec x{1.0};
  stt::RkWork w;
  auto rhs = [](double, std::span<const double> x, std::span<double> dx) { dx[0] = -x[0]; };
  for (int k = 0; k < 1000; ++k) stt::rk4_step(rhs, k * 1e-3, 1e-3, x, w);
  REQUIRE_THAT(x[0], WithinAbs(0.36787944117144233, 1e-12));
}

TEST_CASE("rk4_step_from matches rk4_step when handed the first stage") {
  auto rhs = [](double t, std::span<const double> x, std::span<double> dx) {
    dx[0] = std::sin(t) - 0.5 * x[0];
    dx[1] = x[0] * x[0];
  };
  stt::Vec a{0.3, -0.2}, b{0.3, -0.2};
  stt::RkWork wa, wb;
  stt::rk4_step(rhs, 0.7, 0.05, a, wa);
  stt::Vec k1(2);
  rhs(0.7, std::span<const double>(b), std::span<double>(k1));
  stt::rk4_step_from(rhs, 0.7, 0.05, b, k1, wb);
  REQUIRE(a[0] == b[0]);
  REQUIRE(a[1] == b[1]);
}

TEST_CASE("Euler step is the first-order update") {
  stt::Vec x{2.0};
  stt::Vec k1{-4.0};
  stt::euler_step_from(0.25, x, k1);
  REQUIRE(x[0] == 1.0);
}

TEST_CASE("interaction weights of an ordered pair sum to one before completion") {
  for (double sa_k : {0.1, 0.3, 0.5, 0.99}) {
    for (double sa_l : {0.1, 0.7}) {
      const double f = stt::sif(sa_k, sa_l, 3.0, 10.0, 0.5);
      const double g = stt::sif(sa_l, sa_k, 3.0, 10.0, 0.5);
      REQUIRE_THAT(f + g, WithinAbs(1.0, 1e-15));
      REQUIRE(f > 0.0);
    }
  }
}

TEST_CASE("interaction weight flips and decays after completion") {
  // Half-decay point of the Gaussian tail: t = tc + b sqrt(ln 2).
  const double b = 0.5;
  const double t = 10.0 + 0.41627730557884884;
  REQUIRE_THAT(stt::sif(0.7, 0.3, t, 10.0, b), WithinAbs(-0.35, 1e-12));
  // Far into the tail the weight vanishes.
  REQUIRE_THAT(stt::sif(0.7, 0.3, 10.0 + 10.0 * b, 10.0, b), WithinAbs(0.0, 1e-15));
}

TEST_CASE("interaction weight at the completion instant starts the tail") {
  REQUIRE_THAT(stt::sif(0.7, 0.3, 10.0, 10.0, 0.5), WithinAbs(-0.7, 1e-15));
}

TEST_CASE("zero tail width means no post-completion interaction") {
  REQUIRE(stt::sif(0.7, 0.3, 10.0, 10.0, 0.0) == 0.0);
  REQUIRE(stt::sif(0.7, 0.3, 11.0, 10.0, 0.0) == 0.0);
  // Just before completion the weight is still the plain share.
  REQUIRE_THAT(stt::sif(0.7, 0.3, 10.0 - 1e-12, 10.0, 0.0), WithinAbs(0.7, 1e-15));
}
