#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "stt/tube.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

stt::Scenario make_pair_scenario() {
  stt::Scenario sc;
  sc.name = "pair";
  sc.dimension = 2;
  sc.nu = 10.0;
  sc.horizon = 20.0;

  stt::AgentSpec a;
  a.id = "A";
  a.social_index = 0.6;
  a.start_point = {0.0, 0.0};
  a.start_radius = 0.6;
  a.target_point = {5.0, 0.0};
  a.target_radius = 0.6;
  a.completion_time = 10.0;
  a.rho_min = 0.3;
  a.rho_max = 0.5;
  a.goal_gain = 0.4;
  a.h2 = {1.5};
  a.h3 = {0.7};
  a.h2_hat = 2.0;
  a.h3_hat = 0.9;
  a.h2_hat_pairs["B"] = 3.0;  // override for this partner
  a.sif_decay = 0.5;
  a.kappa = {4.0};

  stt::AgentSpec b = a;
  b.id = "B";
  b.social_index = 0.4;
  b.start_point = {2.0, 0.0};
  b.target_point = {-3.0, 0.0};
  b.completion_time = 12.0;
  b.rho_min = 0.25;
  b.rho_max = 0.45;
  b.h2_hat_pairs.clear();

  sc.agents = {a, b};
  sc.resolve_pair_gains();
  return sc;
}

stt::NeighborSnapshot snapshot_of(const stt::Scenario& sc, const stt::Vec& flat_centers) {
  stt::NeighborSnapshot snap;
  snap.dim = sc.dimension;
  snap.centers = flat_centers;
  for (const auto& a : sc.agents) {
    stt::NeighborSnapshot::Meta m;
    m.rho_min = a.rho_min;
    m.rho_max = a.rho_max;
    m.s_a = a.social_index;
    m.t_c = a.completion_time;
    m.sif_decay = a.sif_decay;
    snap.meta.push_back(m);
  }
  return snap;
}

}  // namespace

TEST_CASE("detour is orthogonal, norm preserving, and goal aligned") {
  const stt::Vec goal{0.3, 0.8, -0.2, 0.1, 0.9};
  for (std::size_t n : {2u, 3u, 5u}) {
    stt::Vec m(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m[i] = 0.7 * static_cast<double>(i + 1) - 1.1;
    const stt::Vec g(goal.begin(), goal.begin() + static_cast<long>(n));
    const stt::Vec v = stt::orthogonal_detour(m, g);
    REQUIRE_THAT(stt::dot(v, m), WithinAbs(0.0, 1e-12 * stt::norm(m) * stt::norm(m)));
    REQUIRE_THAT(stt::norm(v), WithinRel(stt::norm(m), 1e-12));
    REQUIRE(stt::dot(v, g) >= 0.0);
  }
}

TEST_CASE("detour vanishes in one dimension and for a zero input") {
  const stt::Vec one{3.0};
  REQUIRE(stt::orthogonal_detour(one, one) == stt::Vec{0.0});
  const stt::Vec z{0.0, 0.0};
  const stt::Vec g{1.0, 0.0};
  REQUIRE(stt::orthogonal_detour(z, g) == stt::Vec(2, 0.0));
}

TEST_CASE("detour falls back to a canonical axis when parallel to the goal") {
  const stt::Vec m{0.0, 0.0, 2.0};
  const stt::Vec g{0.0, 0.0, -5.0};  // anti-parallel: cross product vanishes
  const stt::Vec v = stt::orthogonal_detour(m, g);
  REQUIRE_THAT(stt::norm(v), WithinRel(2.0, 1e-12));
  REQUIRE_THAT(stt::dot(v, m), WithinAbs(0.0, 1e-12));
}

TEST_CASE("detour keeps its orientation when the goal is exactly perpendicular") {
  const stt::Vec m{1.0, 0.0};
  const stt::Vec g{-2.0, 0.0};  // goal parallel to m, perpendicular to the detour
  const stt::Vec v = stt::orthogonal_detour(m, g);
  // Unflipped 90-degree rotation of (1, 0).
  REQUIRE(v[0] == 0.0);
  REQUIRE(v[1] == 1.0);
}

TEST_CASE("detour flips to the goal side") {
  const stt::Vec m{1.0, 0.0};
  const stt::Vec g{0.0, -1.0};
  const stt::Vec v = stt::orthogonal_detour(m, g);
  REQUIRE(v[1] == -1.0);
}

TEST_CASE("effective pair distances split the center gap exactly") {
  const double D = 1.7, rk = 0.3, rl = 0.25;
  for (double phi : {0.0, 0.2, 0.5, 0.93, 1.0}) {
    const double dk = stt::d_prime_agent(D, rk, rl, phi);
    const double dl = stt::d_prime_agent(D, rl, rk, 1.0 - phi);
    REQUIRE_THAT(dk + dl, WithinAbs(D, 1e-12));
    REQUIRE(dk >= rk - 1e-12);
  }
}

TEST_CASE("goal attraction pulls along the remaining offset") {
  const stt::Vec target{1.0, 0.0}, sigma{0.0, 0.0};
  stt::Vec out(2);
  stt::goal_attraction(0.05, 120.0, 60.0, target, sigma, out);
  REQUIRE_THAT(out[0], WithinAbs(0.1, 1e-15));  // 0.05 * (120/60) * 1
  REQUIRE(out[1] == 0.0);
}

TEST_CASE("goal attraction switches off at the completion time") {
  const stt::Vec target{1.0, 0.0}, sigma{0.0, 0.0};
  stt::Vec out(2);
  stt::goal_attraction(0.05, 10.0, 10.0, target, sigma, out);
  REQUIRE(out[0] == 0.0);
  stt::goal_attraction(0.05, 10.0, 11.0, target, sigma, out);
  REQUIRE(out[0] == 0.0);
}

TEST_CASE("goal attraction time factor is capped near completion") {
  const stt::Vec target{1.0, 0.0}, sigma{0.0, 0.0};
  stt::Vec out(2);
  stt::goal_attraction(0.05, 10.0, 10.0 - 1e-9, target, sigma, out);
  REQUIRE_THAT(out[0], WithinRel(0.05 * stt::k_time_factor_max, 1e-12));
}

TEST_CASE("obstacle terms switch off beyond the activation clearance") {
  const stt::Vec sigma{2.0, 0.0}, o{0.0, 0.0}, goal{1.0, 1.0};
  const auto t = stt::obstacle_terms(sigma, o, 0.5, 0.3, 1.0, goal);
  REQUIRE(t.alpha == 0.0);
  REQUIRE(stt::norm(t.m) == 0.0);
  REQUIRE_FALSE(t.floored);
}

TEST_CASE("obstacle terms reference value inside the activation band") {
  const stt::Vec sigma{1.2, 0.0}, o{0.0, 0.0}, goal{1.0, 1.0};
  const auto t = stt::obstacle_terms(sigma, o, 0.5, 0.3, 1.0, goal);
  REQUIRE_THAT(t.alpha, WithinRel(1.0 / 0.7 - 1.0, 1e-14));
  // m = (sigma - o) / (1.2 - 0.8)^3
  REQUIRE_THAT(t.m[0], WithinRel(1.2 / 0.064, 1e-14));
  REQUIRE(t.m[1] == 0.0);
  // v is the 90-degree rotation flipped toward the goal.
  REQUIRE_THAT(t.v[1], WithinRel(1.2 / 0.064, 1e-14));
  REQUIRE_FALSE(t.floored);
}

TEST_CASE("obstacle switch is continuous at the activation boundary") {
  const stt::Vec o{0.0, 0.0}, goal{1.0, 1.0};
  const double eps = 1e-9;
  const stt::Vec just_inside{1.5 - eps, 0.0};  // clearance rho_max - eps
  const auto t = stt::obstacle_terms(just_inside, o, 0.5, 0.3, 1.0, goal);
  REQUIRE(t.alpha > 0.0);
  REQUIRE(t.alpha < 2e-9);  // ~eps / rho_max^2
}

TEST_CASE("obstacle terms floor a vanishing clearance") {
  const stt::Vec sigma{0.5 + 1e-9, 0.0}, o{0.0, 0.0}, goal{1.0, 1.0};
  const auto t = stt::obstacle_terms(sigma, o, 0.5, 0.3, 1.0, goal);
  REQUIRE(t.floored);
  REQUIRE_THAT(t.alpha, WithinRel(1.0 / stt::k_den_floor - 1.0, 1e-9));
}

TEST_CASE("agent terms switch on the summed maximum radii") {
  const stt::Vec a{0.0, 0.0}, b{1.0, 0.0}, goal{1.0, 1.0};
  const auto off = stt::agent_terms(a, b, 0.3, 0.25, 0.5, 0.45, goal);
  REQUIRE(off.beta == 0.0);  // distance 1.0 > 0.95
  const auto on = stt::agent_terms(a, stt::Vec{0.9, 0.0}, 0.3, 0.25, 0.5, 0.45, goal);
  REQUIRE_THAT(on.beta, WithinRel(1.0 / 0.9 - 1.0 / 0.95, 1e-12));
  // m_hat = (a - b) / (0.9 - 0.55)^3
  REQUIRE_THAT(on.m_hat[0], WithinRel(-0.9 / (0.35 * 0.35 * 0.35), 1e-12));
}

TEST_CASE("agent terms floor a vanishing gap above the minimum radii") {
  const stt::Vec a{0.0, 0.0}, b{0.55 + 1e-9, 0.0}, goal{1.0, 1.0};
  const auto t = stt::agent_terms(a, b, 0.3, 0.25, 0.5, 0.45, goal);
  REQUIRE(t.floored);
}

TEST_CASE("center field with goal_only keeps just the attraction term") {
  const stt::Scenario sc = make_pair_scenario();
  const stt::Vec centers{0.6, 0.2, 1.3, -0.1};
  const stt::NeighborSnapshot snap = snapshot_of(sc, centers);
  const stt::ObstacleState ob{{1.0, 0.8}, 0.2};

  stt::Vec out(2), want(2);
  stt::CenterDiag diag;
  stt::center_rhs(sc, 0, snap.center_of(0), 2.0, snap, std::span<const stt::ObstacleState>(&ob, 1),
                  true, out, &diag);
  stt::goal_attraction(0.4, 10.0, 2.0, sc.agents[0].target_point, snap.center_of(0), want);
  REQUIRE(out == want);
  REQUIRE(diag.alpha == std::vector<double>{0.0});
  REQUIRE(diag.beta == std::vector<double>(2, 0.0));
}

TEST_CASE("center field assembles goal, obstacle, and neighbor contributions") {
  const stt::Scenario sc = make_pair_scenario();
  const stt::Vec centers{0.6, 0.2, 1.3, -0.1};
  const stt::NeighborSnapshot snap = snapshot_of(sc, centers);
  const stt::ObstacleState ob{{1.0, 0.8}, 0.2};
  const double t = 2.0;

  stt::Vec out(2);
  stt::CenterDiag diag;
  std::uint64_t floors = 0;
  stt::center_rhs(sc, 0, snap.center_of(0), t, snap, std::span<const stt::ObstacleState>(&ob, 1),
                  false, out, &diag, &floors);

  const auto& a = sc.agents[0];
  stt::Vec goal_dir{a.target_point[0] - 0.6, a.target_point[1] - 0.2};
  stt::Vec want(2);
  stt::goal_attraction(a.goal_gain, a.completion_time, t, a.target_point, snap.center_of(0), want);
  const auto ot = stt::obstacle_terms(snap.center_of(0), ob.center, ob.radius, a.rho_min,
                                      a.rho_max, goal_dir);
  const auto at = stt::agent_terms(snap.center_of(0), snap.center_of(1), a.rho_min,
                                   sc.agents[1].rho_min, a.rho_max, sc.agents[1].rho_max,
                                   goal_dir);
  const double phi = stt::sif(a.social_index, sc.agents[1].social_index, t, a.completion_time,
                              a.sif_decay);
  for (std::size_t i = 0; i < 2; ++i) {
    want[i] += (a.h2[0] * ot.m[i] + a.h3[0] * ot.v[i]) * ot.alpha;
    // Pair override: agent A uses h2_hat 3.0 against B, default h3_hat 0.9.
    want[i] += (3.0 * at.m_hat[i] + 0.9 * at.v_hat[i]) * at.beta * phi;
  }

  REQUIRE(ot.alpha > 0.0);  // the test geometry must actually engage both terms
  REQUIRE(at.beta > 0.0);
  REQUIRE_THAT(out[0], WithinRel(want[0], 1e-13));
  REQUIRE_THAT(out[1], WithinRel(want[1], 1e-13));
  REQUIRE(floors == 0);
  REQUIRE_THAT(diag.alpha[0], WithinRel(ot.alpha, 1e-14));
  REQUIRE_THAT(diag.beta[1], WithinRel(at.beta, 1e-14));
  REQUIRE_THAT(diag.phi[1], WithinRel(phi, 1e-14));
  REQUIRE(diag.beta[0] == 0.0);  // self slot
}

TEST_CASE("pair gain matrix resolves overrides both ways") {
  const stt::Scenario sc = make_pair_scenario();
  REQUIRE(sc.h2_hat(0, 1) == 3.0);  // A overrides against B
  REQUIRE(sc.h3_hat(0, 1) == 0.9);  // no h3 override: default
  REQUIRE(sc.h2_hat(1, 0) == 2.0);  // B keeps its default
  REQUIRE(sc.h2_hat(0, 0) == 0.0);  // self slot empty
}

TEST_CASE("tube radius of an unobstructed singleton is exactly rho_max") {
  stt::Scenario sc = make_pair_scenario();
  sc.agents.resize(1);
  sc.resolve_pair_gains();
  stt::NeighborSnapshot snap = snapshot_of(sc, {0.6, 0.2});

  double d1 = 0.0, d2 = 0.0;
  const double r = stt::tube_radius(sc, 0, snap.center_of(0), 2.0, snap, {}, &d1, &d2);
  REQUIRE(r == sc.agents[0].rho_max);
  REQUIRE(d1 == stt::k_inf);
  REQUIRE(d2 == stt::k_inf);
}

TEST_CASE("tube radius aggregates exact clearances for single contributors") {
  const stt::Scenario sc = make_pair_scenario();
  const stt::Vec centers{0.6, 0.2, 1.3, -0.1};
  const stt::NeighborSnapshot snap = snapshot_of(sc, centers);
  const stt::ObstacleState ob{{1.0, 0.8}, 0.2};
  const double t = 2.0;

  double d1 = 0.0, d2 = 0.0;
  const double r = stt::tube_radius(sc, 0, snap.center_of(0), t, snap,
                                    std::span<const stt::ObstacleState>(&ob, 1), &d1, &d2);

  const double want_d1 = stt::dist(snap.center_of(0), ob.center) - 0.2;
  const double phi = stt::sif(0.6, 0.4, t, 10.0, 0.5);
  const double want_d2 = stt::d_prime_agent(stt::dist(snap.center_of(0), snap.center_of(1)),
                                            0.3, 0.25, phi);
  REQUIRE_THAT(d1, WithinRel(want_d1, 1e-14));
  REQUIRE_THAT(d2, WithinRel(want_d2, 1e-14));
  REQUIRE_THAT(r, WithinRel(stt::radius_closed_form(want_d1, want_d2, 0.5, 10.0), 1e-14));
  REQUIRE(r < 0.5);
}
