#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include "nrd/errors.hpp"
#include "nrd/spectral.hpp"

using namespace nrd;
using Catch::Approx;

TEST_CASE("Neumann eigenvalues") {
  CHECK(eigenvalue(2.0, 1) == 0.25);
  CHECK(eigenvalue(4.0, 10) == 6.25);
  CHECK(eigenvalue(Domain1D(3.0, 32), 0) == 0.0);
  const Domain1D dom(2.0, 256);
  // discrete symbol tends to i^2/l^2 with second-order error
  for (int i : {1, 2, 5}) {
    const double e = std::abs(discrete_eigenvalue(dom, i) - eigenvalue(dom, i));
    const double e2 = std::abs(discrete_eigenvalue(Domain1D(2.0, 512), i) - eigenvalue(dom, i));
    CHECK(e / e2 == Approx(4.0).epsilon(1e-3));
  }
}

TEST_CASE("domain validation and grid") {
  CHECK_THROWS_AS(Domain1D(0.0, 32), Error);
  CHECK_THROWS_AS(Domain1D(1.0, 8), Error);
  const Domain1D dom(2.0, 16);
  CHECK(dom.length() == Approx(2 * std::numbers::pi));
  CHECK(dom.x(0) == Approx(dom.h() / 2));
  CHECK(dom.x(15) == Approx(dom.length() - dom.h() / 2));
  CHECK(dom.grid().size() == 16);
}

TEST_CASE("spatial average") {
  const Domain1D dom(1.0, 64);
  std::vector<double> c(64, 3.25);
  CHECK(spatial_average(c, dom) == 3.25);
  std::vector<double> f(64);
  for (int j = 0; j < 64; ++j) f[j] = 2 + std::cos(3 * dom.x(j));
  CHECK(spatial_average(f, dom) == Approx(2.0).epsilon(1e-14));
  std::vector<double> bad(63, 1.0);
  try {
    spatial_average(bad, dom);
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::LengthMismatch);
  }
}

TEST_CASE("cos_mode matches the library cosine and is mirror exact") {
  for (int N : {16, 64, 256})
    for (int i : {0, 1, 2, 7, 10, N - 1})
      for (int j = 0; j < N; ++j) {
        const double ref = double(std::cos((long double)i * (j + 0.5L) * std::numbers::pi_v<long double> / N));
        REQUIRE(std::abs(cos_mode(i, j, N) - ref) < 1e-15);
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        REQUIRE(cos_mode(i, N - 1 - j, N) == sign * cos_mode(i, j, N));
      }
}

TEST_CASE("decompose and reconstruct") {
  const Domain1D dom(4.0, 128);
  std::vector<double> f(dom.N);
  for (int j = 0; j < dom.N; ++j) {
    const double x = dom.x(j);
    f[j] = 0.3 + 0.1 * std::cos(x / 4) - 0.05 * std::cos(10 * x / 4) + std::exp(-std::pow(x - 5, 2));
  }
  const ModeSpectrum s = decompose(f, dom);
  const auto g = reconstruct(s, dom);
  double err = 0;
  for (int j = 0; j < dom.N; ++j) err = std::max(err, std::abs(f[j] - g[j]));
  CHECK(err < 1e-10);

  std::vector<double> pure(dom.N);
  for (int j = 0; j < dom.N; ++j) pure[j] = 1.5 - 0.2 * std::cos(10 * dom.x(j) / 4);
  const ModeSpectrum p = decompose(pure, dom);
  CHECK(p.c[0] == Approx(1.5).epsilon(1e-14));
  CHECK(p.c[10] == Approx(-0.2).epsilon(1e-12));
  for (int i = 1; i < dom.N; ++i)
    if (i != 10) CHECK(std::abs(p.c[i]) < 1e-14);
  CHECK(dominant_mode(p) == 10);
}

TEST_CASE("dominant mode threshold") {
  ModeSpectrum s;
  s.c.assign(32, 0.0);
  s.c[0] = 1.0;
  s.c[3] = 0.01;
  CHECK_FALSE(dominant_mode(s).has_value());
  s.c[3] = 0.05;
  s.c[2] = -0.06;
  CHECK(dominant_mode(s) == 2);
  s.c[0] = 10.0;  // threshold scales with the mean
  CHECK_FALSE(dominant_mode(s).has_value());
}

TEST_CASE("sample_cosine is reflection symmetric for whole modes") {
  const Domain1D dom(4.0, 256);
  const auto even = sample_cosine(dom, 0.35, -0.1, 2.5);  // mode 10
  const auto odd = sample_cosine(dom, 0.3, 0.1, 0.25);    // mode 1
  for (int j = 0; j < dom.N; ++j) {
    REQUIRE(even[j] == even[dom.N - 1 - j]);
    REQUIRE(std::abs(odd[j] + odd[dom.N - 1 - j] - 0.6) < 1e-15);
    REQUIRE(even[j] == Approx(0.35 - 0.1 * std::cos(2.5 * dom.x(j))).epsilon(1e-14));
  }
}

TEST_CASE("decompose is thread safe") {
  const Domain1D dom(1.0, 96);
  std::vector<double> f(dom.N);
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> U(0, 1);
  for (double& x : f) x = U(gen);
  const ModeSpectrum ref = decompose(f, dom);
  std::vector<std::thread> pool;
  std::atomic<int> bad{0};
  for (int t = 0; t < 8; ++t)
    pool.emplace_back([&] {
      for (int k = 0; k < 20; ++k)
        if (decompose(f, dom).c != ref.c) ++bad;
    });
  for (auto& t : pool) t.join();
  CHECK(bad == 0);
}
