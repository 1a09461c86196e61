#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "nrd/solver.hpp"
#include "nrd/stability.hpp"
#include "oracles.hpp"

using namespace nrd;
using Catch::Approx;

namespace {

UserModel zero_kinetics(int species) {
  return UserModel("diffusion", species, [](const Vec2&, const Vec2&) { return Vec2{0.0, 0.0}; }, {1.0, 1.0});
}

SimConfig config(double l, int N, double dt, double t_end) {
  SimConfig c;
  c.domain = Domain1D(l, N);
  c.dt = dt;
  c.t_end = t_end;
  return c;
}

// Max error at t = 1 for pure diffusion from cos(x) with d = 1, l = 1.
double diffusion_error(int N, double dt) {
  const UserModel m = zero_kinetics(1);
  SimConfig c = config(1.0, N, dt, 1.0);
  c.ic = InitialCondition::cosine({0.0, 1.0, 1.0});
  c.snapshot_every = int(std::llround(1.0 / dt));
  c.early_exit = false;
  const auto res = run(m, c);
  const auto& u = res.trajectory.u.back();
  double e = 0;
  for (int j = 0; j < N; ++j) e = std::max(e, std::abs(u[j] - std::exp(-1.0) * std::cos(c.domain.x(j))));
  return e;
}

}  // namespace

TEST_CASE("pure diffusion conserves mass") {
  const UserModel m = zero_kinetics(2);
  SimConfig c = config(1.0, 64, 0.01, 1.0);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> U(0, 2);
  std::vector<double> u(64), v(64);
  for (auto& x : u) x = U(gen);
  for (auto& x : v) x = U(gen);
  c.ic = InitialCondition::profile(u, v);
  Integrator it(m, c);
  State s{0, u, v};
  const double mu = spatial_average(u, c.domain), mv = spatial_average(v, c.domain);
  for (int k = 0; k < 100; ++k) {
    const double before = spatial_average(s.u, c.domain);
    it.step(s);
    REQUIRE(std::abs(spatial_average(s.u, c.domain) - before) < 1e-13);
  }
  CHECK(std::abs(spatial_average(s.u, c.domain) - mu) < 1e-12);
  CHECK(std::abs(spatial_average(s.v, c.domain) - mv) < 1e-12);
}

TEST_CASE("the equilibrium is a fixed point of both steppers") {
  for (const auto& m : {make_builtin("coop", {{"a", 1}, {"b", 0.1}, {"c", 0.1}, {"d", 1}}),
                        make_builtin("rm", {{"k", 0.5}, {"m", 6}, {"theta", 1}})}) {
    for (StepperKind st : {StepperKind::IMEX, StepperKind::RK4}) {
      SimConfig c = config(1.0, 32, 1e-3, 1.0);
      c.d1 = 0.1;
      c.d2 = 0.2;
      c.stepper = st;
      Integrator it(*m, c);
      const auto eq = m->equilibrium().values;
      State s{0, std::vector<double>(32, eq[0]), std::vector<double>(32, eq[1])};
      for (int k = 0; k < 10; ++k) {
        it.step(s);
        for (int j = 0; j < 32; ++j) {
          REQUIRE(std::abs(s.u[j] - eq[0]) < 1e-12 * (k + 1));
          REQUIRE(std::abs(s.v[j] - eq[1]) < 1e-12 * (k + 1));
        }
      }
      CHECK(it.residual(s) < 1e-12);
    }
  }
}

TEST_CASE("reflection-symmetric states stay exactly symmetric") {
  const auto m = make_builtin("rm", {{"k", 0.5}, {"lambda", 0.35}, {"theta", 1}});
  SimConfig c = config(4.0, 256, 0.005, 10.0);
  c.d1 = 0.006;
  c.d2 = 0.9;
  const Domain1D& dom = c.domain;
  State s{0, sample_cosine(dom, 0.35, -0.1, 2.5), sample_cosine(dom, 0.103, -0.01, 2.5)};
  Integrator it(*m, c);
  for (int k = 0; k < 2000; ++k) it.step(s);
  for (int j = 0; j < dom.N; ++j) {
    REQUIRE(s.u[j] == s.u[dom.N - 1 - j]);
    REQUIRE(s.v[j] == s.v[dom.N - 1 - j]);
  }
}

TEST_CASE("growth-rate probe") {
  SECTION("scalar example, unstable mode 1") {
    NonlocalLogistic m(0.1, 1.1);
    SimConfig c = config(2.0, 128, 0.01, 150.0);
    c.d1 = 0.3;
    const auto g = growth_rate_probe(m, c, 1);
    CHECK(g.rate == Approx(0.025).epsilon(0.1));
    // dense linearization eigenvalue for mode 1 on the same grid
    const Eigen::VectorXcd ev = oracle::dense_linearization(m, 0.3, 1, c.domain).eigenvalues();
    double best = -1e300;
    for (int k = 0; k < ev.size(); ++k) best = std::max(best, ev[k].real());
    CHECK(g.rate == Approx(best).epsilon(0.1));
  }
  SECTION("predator-prey wave mode") {
    RMNonlocal m(0.5, 6, 1);
    SimConfig c = config(4.0, 128, 0.005, 200.0);
    c.d1 = 0.1;
    c.d2 = 0.2;
    c.snapshot_every = 20;
    const auto g = growth_rate_probe(m, c, 1);
    const Eigen::Vector2cd ev = block_at(m.jacobians(0.1, 0.2), eigenvalue(4.0, 1), false).eigenvalues();
    CHECK(g.rate > 0);
    CHECK(g.rate == Approx(ev[0].real()).epsilon(0.1));
    CHECK(g.frequency == Approx(std::abs(ev[0].imag())).epsilon(0.1));
  }
  SECTION("stable mode decays") {
    NonlocalLogistic m(0.1, 1.1);
    SimConfig c = config(2.0, 64, 0.01, 40.0);
    c.d1 = 0.3;
    c.snapshot_every = 10;
    CHECK(growth_rate_probe(m, c, 2).rate == Approx(-0.2).epsilon(0.1));
  }
  SECTION("window too short") {
    NonlocalLogistic m(0.1, 1.1);
    SimConfig c = config(2.0, 64, 0.01, 1.0);
    c.d1 = 0.3;
    try {
      growth_rate_probe(m, c, 1);
      FAIL("expected WindowTooShort");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::WindowTooShort);
    }
  }
}

TEST_CASE("averaged ODE") {
  const MembraneFeedback mem(1, 1, 1);
  const auto g = as_general(mem);
  const double ustar = (std::sqrt(5.0) - 1) / 2;
  CHECK(mem.equilibrium().values[0] == Approx(ustar).epsilon(1e-12));
  for (double ic : {0.0, 0.3, 2.0, 10.0}) {
    const auto series = averaged_ode_reduce(g, ic, 40, 0.01);
    CHECK(series.back().second == Approx(ustar).epsilon(1e-10));
  }
  const auto flat = averaged_ode_reduce(g, ustar, 10, 0.1);
  for (const auto& [t, y] : flat) CHECK(std::abs(y - ustar) < 1e-15);
  // the general form reproduces the membrane kinetics pointwise
  for (double u : {0.0, 0.4, 1.3})
    for (double w : {0.2, 0.9}) CHECK(g.kinetics({u, 0}, {w, 0})[0] == Approx(mem.kinetics({u, 0}, {w, 0})[0]));
}

TEST_CASE("first order in time, second order in space") {
  const double e1 = diffusion_error(1024, 0.04), e2 = diffusion_error(1024, 0.02), e3 = diffusion_error(1024, 0.01);
  CHECK(std::log2(e1 / e2) == Approx(1.0).margin(0.1));
  CHECK(std::log2(e2 / e3) == Approx(1.0).margin(0.1));
  const double s1 = diffusion_error(16, 1e-5), s2 = diffusion_error(32, 1e-5);
  CHECK(std::log2(s1 / s2) == Approx(2.0).margin(0.1));
}

TEST_CASE("trajectory bookkeeping") {
  NonlocalLogistic m(0.1, 1.1);
  SimConfig c = config(2.0, 64, 0.01, 10.0);
  c.d1 = 0.45;
  c.snapshot_every = 7;
  c.early_exit = false;
  c.ic = InitialCondition::perturbed_equilibrium(m, 2.0, 0.01);
  const auto res = run(m, c);
  const auto& tr = res.trajectory;
  CHECK(tr.frames() == std::size_t(1000 / 7 + 1));
  for (std::size_t f = 0; f < tr.frames(); ++f) {
    REQUIRE(std::abs(tr.avg_u[f] - spatial_average(tr.u[f], c.domain)) < 1e-12);
    REQUIRE(tr.times[f] == Approx(0.07 * f).margin(1e-12));
  }
}

TEST_CASE("configuration and state guards") {
  NonlocalLogistic m(0.1, 1.1);
  SimConfig c = config(2.0, 64, 0.01, 10.0);
  c.stepper = StepperKind::RK4;
  CHECK_THROWS_AS(Integrator(m, c), Error);  // explicit step above the diffusion limit
  c.stepper = StepperKind::IMEX;
  c.ic = InitialCondition::profile(std::vector<double>(63, 1.0));
  try {
    run(m, c);
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::LengthMismatch);
  }
  c.ic = InitialCondition::cosine({0.1, 0.5, 0.5});
  try {
    run(m, c);
    FAIL("expected ParameterConstraintViolated");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParameterConstraintViolated);
  }
  UserModel blow("blow", 1, [](const Vec2& u, const Vec2&) { return Vec2{u[0] * u[0] - 1, 0.0}; }, {1.0, 0.0});
  c.ic = InitialCondition::cosine({2.0, 0.0, 1.0});
  try {
    run(blow, c);
    FAIL("expected NonFiniteState");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFiniteState);
  }
}

TEST_CASE("oscillation analysis of a synthetic norm series") {
  Trajectory tr;
  tr.domain = Domain1D(1.0, 16);
  for (int k = 0; k <= 4000; ++k) {
    const double t = 0.05 * k;
    tr.times.push_back(t);
    tr.l2.push_back(1 + 0.1 * std::sin(2 * std::numbers::pi * t / 3.0));
    std::vector<double> u(16);
    for (int j = 0; j < 16; ++j) u[j] = 1 + 0.1 * std::sin(t) * cos_mode(2, j, 16);
    tr.u.push_back(u);
  }
  auto o = classify_trajectory(tr, false, 0.1, 0.02);
  CHECK(o.kind == OutcomeKind::PeriodicOrbit);
  CHECK(o.period == Approx(3.0).epsilon(1e-3));
  CHECK(o.mode == 2);
  CHECK(o.periods_used >= 5);

  for (std::size_t k = 0; k < tr.l2.size(); ++k)
    tr.l2[k] = 1 + 0.1 * std::exp(-0.05 * tr.times[k]) * std::sin(2 * std::numbers::pi * tr.times[k] / 3.0);
  CHECK(classify_trajectory(tr, false, 0.1, 0.02).kind == OutcomeKind::Undecided);
}
