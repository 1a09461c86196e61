#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>

#include "nrd/stability.hpp"
#include "oracles.hpp"

using namespace nrd;
using Catch::Approx;

namespace {

JacobianData make_J(const Eigen::Matrix2d& JU, const Eigen::Matrix2d& JUbar, double d1, double d2) {
  JacobianData J;
  J.JU = JU;
  J.JUbar = JUbar;
  J.D = Eigen::Vector2d(d1, d2).asDiagonal();
  return J;
}

// Random inputs whose sum matrix is -I, so the base state is always stable.
std::map<CaseLabel, std::vector<JacobianData>> random_cases(int draws, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> U(-2, 2), E(-2, 1);
  std::map<CaseLabel, std::vector<JacobianData>> out;
  for (int k = 0; k < draws; ++k) {
    Eigen::Matrix2d JU;
    JU << U(gen), U(gen), U(gen), U(gen);
    const JacobianData J =
        make_J(JU, -Eigen::Matrix2d::Identity() - JU, std::pow(10.0, E(gen)), std::pow(10.0, E(gen)));
    const auto rep = classify(J);
    if (out[rep.label].size() < 20) out[rep.label].push_back(J);
  }
  return out;
}

}  // namespace

TEST_CASE("dispersion roots agree with a companion-matrix solve") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> U(-2, 2);
  for (int k = 0; k < 200; ++k) {
    Eigen::Matrix2d JU;
    JU << U(gen), U(gen), U(gen), U(gen);
    const auto s = dispersion(make_J(JU, Eigen::Matrix2d::Zero(), 0.05 + std::abs(U(gen)), 0.05 + std::abs(U(gen))));
    if (!s.p_plus) {
      CHECK(s.Delta <= 0);
      continue;
    }
    Eigen::Matrix2d comp;
    comp << s.b / (s.d1 * s.d2), -s.det / (s.d1 * s.d2), 1, 0;
    Eigen::Vector2cd r = comp.eigenvalues();
    double lo = std::min(r[0].real(), r[1].real()), hi = std::max(r[0].real(), r[1].real());
    CHECK(*s.p_minus == Approx(lo).epsilon(1e-9).margin(1e-12));
    CHECK(*s.p_plus == Approx(hi).epsilon(1e-9).margin(1e-12));
    CHECK(std::abs(s.D(*s.p_plus)) < 1e-10 * std::max(1.0, std::abs(s.det)));
  }
}

TEST_CASE("every case label is reached and verified by brute force") {
  const auto cases = random_cases(200000, 5);
  for (CaseLabel c : {CaseLabel::i, CaseLabel::ii_a, CaseLabel::ii_b, CaseLabel::ii_c, CaseLabel::ii_d,
                      CaseLabel::iii_a, CaseLabel::iii_b, CaseLabel::iv_a, CaseLabel::iv_b}) {
    INFO("case " << to_string(c));
    REQUIRE(cases.count(c));
    for (const auto& J : cases.at(c)) CHECK(verify_intervals(J, classify(J), 1000));
  }
  CHECK_FALSE(cases.count(CaseLabel::none));
}

TEST_CASE("localized inputs never produce a cycle interval") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> U(-2, 2), E(-2, 1);
  int tested = 0;
  while (tested < 300) {
    Eigen::Matrix2d JU;
    JU << U(gen), U(gen), U(gen), U(gen);
    if (!is_stable(JU)) continue;
    const JacobianData J = make_J(JU, Eigen::Matrix2d::Zero(), std::pow(10.0, E(gen)), std::pow(10.0, E(gen)));
    const auto rep = classify(J);
    CHECK(rep.I_H.empty());
    CHECK(verify_intervals(J, rep));
    ++tested;
  }
}

TEST_CASE("classification preconditions") {
  Eigen::Matrix2d JU;
  JU << 1, 0, 0, 1;
  try {
    classify(make_J(JU, Eigen::Matrix2d::Zero(), 1, 1));
    FAIL("expected BaseStateUnstable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BaseStateUnstable);
  }
  JU << 1, 1, 0, -1;  // trace zero
  try {
    classify(make_J(JU, -Eigen::Matrix2d::Identity() - JU, 1, 1));
    FAIL("expected DegenerateCase");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateCase);
  }
  CHECK_THROWS_AS(verify_intervals(make_J(JU, JU, 1, 1), InstabilityReport{}, 999), Error);
}

TEST_CASE("built-in models: admissible modes") {
  SECTION("cooperative, beta between beta_2 and beta_1") {
    CoopLV m(1, 0.1, 0.1, 1);
    const auto rep = classify(m.jacobians(0.004, 1), 1.0);
    CHECK(rep.label == CaseLabel::i);
    CHECK(rep.steady_modes == std::vector<int>{1});
    CHECK(rep.hopf_modes.empty());
    CHECK(classify(m.jacobians(0.0005, 1), 1.0).steady_modes == std::vector<int>{1, 2});
    CHECK(classify(m.jacobians(0.008, 1), 1.0).steady_modes.empty());
  }
  SECTION("predator-prey, wave modes") {
    RMNonlocal m(0.5, 6, 1);
    const auto rep = classify(m.jacobians(0.1, 0.2), 4.0);
    CHECK(rep.hopf_modes == std::vector<int>{1, 2});
    CHECK(rep.steady_modes.empty());
    CHECK(classify(m.jacobians(0.1, 0.2), 1.0).hopf_modes.empty());
  }
  SECTION("predator-prey, steady modes") {
    RMNonlocal m(0.5, 3.5, 1);
    const auto rep = classify(m.jacobians(0.005, 1), 2.0);
    CHECK(rep.hopf_modes.empty());
    CHECK(rep.steady_modes == std::vector<int>{4, 5});
  }
}

TEST_CASE("scalar mode eigenvalues and critical diffusion") {
  const Domain1D dom(2.0, 256);
  const auto mu = scalar_mode_eigenvalues(0.1, -1.1, 1.0, 0.3, dom, 4);
  CHECK(mu[0] == Approx(-1.0));
  CHECK(mu[1] == Approx(0.025));
  CHECK(mu[2] == Approx(-0.2));
  CHECK(scalar_critical_diffusion(0.1, 1.0, dom) == Approx(0.4).epsilon(1e-14));
  CHECK_THROWS_AS(scalar_critical_diffusion(-0.1, 1.0, dom), Error);
}

TEST_CASE("block matrices are invariant sectors of the discretized linearization") {
  struct Case {
    ModelPtr m;
    double d1, d2, l;
  };
  const std::vector<Case> cases = {
      {make_builtin("logistic", {{"a", 0.1}, {"b", 1.1}}), 0.3, 1, 2},
      {make_builtin("membrane", {{"k_on", 1}, {"k_fb", 1}, {"k_off", 1}}), 0.2, 1, 1},
      {make_builtin("general", {{"a", 1}, {"b", 0.5}, {"c", 0.2}, {"d", 0.3}, {"e", 0.4}}), 0.5, 1, 1.5},
      {make_builtin("coop", {{"a", 1}, {"b", 0.1}, {"c", 0.1}, {"d", 1}}), 0.004, 1, 1},
      {make_builtin("coop2", {{"a", 1}, {"b", 0.1}, {"c", 0.1}, {"d", 0.5}, {"e", 1.5}}), 0.01, 1, 1},
      {make_builtin("rm", {{"k", 0.5}, {"m", 6}, {"theta", 1}}), 0.1, 0.2, 4},
  };
  for (const auto& c : cases) {
    const Domain1D dom(c.l, 48);
    const Eigen::MatrixXd A = oracle::dense_linearization(*c.m, c.d1, c.d2, dom);
    const Eigen::VectorXcd all = A.eigenvalues();
    const JacobianData J = c.m->jacobians(c.d1, c.d2);
    for (int i = 0; i <= 8; ++i) {
      INFO(c.m->name() << " mode " << i);
      const double lam = discrete_eigenvalue(dom, i);
      Eigen::VectorXcd ev;
      if (c.m->species() == 1) {
        ev = Eigen::VectorXcd::Constant(1, i == 0 ? J.sum()(0, 0) : J.JU(0, 0) - lam * c.d1);
      } else {
        ev = block_at(J, lam, i == 0).eigenvalues();
      }
      for (int k = 0; k < ev.size(); ++k) {
        double best = 1e300;
        for (int q = 0; q < all.size(); ++q) best = std::min(best, std::abs(all[q] - ev[k]));
        CHECK(best < 1e-6);
      }
    }
  }
}
