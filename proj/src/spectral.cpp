#include "nrd/spectral.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "nrd/errors.hpp"

namespace nrd {

Domain1D::Domain1D(double l_, int N_) : l(l_), N(N_) {
  if (!(l > 0)) throw Error(ErrorKind::ParameterConstraintViolated, "domain: l must be positive");
  if (N < 16) throw Error(ErrorKind::ParameterConstraintViolated, "domain: N must be at least 16");
}

double Domain1D::length() const { return l * std::numbers::pi; }

std::vector<double> Domain1D::grid() const {
  std::vector<double> x(N);
  for (int j = 0; j < N; ++j) x[j] = this->x(j);
  return x;
}

double eigenvalue(double l, int i) { return double(i) * i / (l * l); }
double eigenvalue(const Domain1D& dom, int i) { return eigenvalue(dom.l, i); }

double discrete_eigenvalue(const Domain1D& dom, int i) {
  const double h = dom.h();
  const double s = std::sin(i * h / (2 * dom.l));
  return 4 * s * s / (h * h);
}

double spatial_average(std::span<const double> field, const Domain1D& dom) {
  if (field.size() != std::size_t(dom.N))
    throw Error(ErrorKind::LengthMismatch, "field has " + std::to_string(field.size()) + " samples, grid has " +
                                               std::to_string(dom.N));
  double s = 0;
  for (double v : field) s += v;
  return s / dom.N;
}

double cos_mode(int i, int j, int N) {
  // angle = m * pi / (2N) with m = i (2j+1); fold m into [0, N] using exact symmetries of cos
  const long long M = 4LL * N;
  long long m = (static_cast<long long>(i) * (2LL * j + 1)) % M;
  if (m < 0) m += M;
  if (m > 2LL * N) m = M - m;
  double sign = 1.0;
  if (m > N) {
    m = 2LL * N - m;
    sign = -1.0;
  }
  if (m == N) return 0.0;
  return sign * std::cos(double(m) * (std::numbers::pi / (2.0 * N)));
}

namespace {

// Row-major table cos_mode(i, j, N), built once per N.
const std::vector<double>& cos_table(int N) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<std::vector<double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[N];
  if (!slot) {
    slot = std::make_unique<std::vector<double>>(std::size_t(N) * N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) (*slot)[std::size_t(i) * N + j] = cos_mode(i, j, N);
  }
  return *slot;
}

}  // namespace

ModeSpectrum decompose(std::span<const double> field, const Domain1D& dom) {
  const int N = dom.N;
  if (field.size() != std::size_t(N)) throw Error(ErrorKind::LengthMismatch, "decompose: field length != N");
  ModeSpectrum s;
  s.c.assign(N, 0.0);
  const auto& T = cos_table(N);
  for (int i = 0; i < N; ++i) {
    const double* row = &T[std::size_t(i) * N];
    double acc = 0;
    for (int j = 0; j < N; ++j) acc += field[j] * row[j];
    s.c[i] = acc * (i == 0 ? 1.0 : 2.0) / N;
  }
  return s;
}

std::vector<double> reconstruct(const ModeSpectrum& s, const Domain1D& dom) {
  const int N = dom.N;
  if (s.c.size() != std::size_t(N)) throw Error(ErrorKind::LengthMismatch, "reconstruct: spectrum length != N");
  std::vector<double> f(N, 0.0);
  const auto& T = cos_table(N);
  for (int i = 0; i < N; ++i) {
    const double* row = &T[std::size_t(i) * N];
    for (int j = 0; j < N; ++j) f[j] += s.c[i] * row[j];
  }
  return f;
}

std::optional<int> dominant_mode(const ModeSpectrum& s, double threshold) {
  if (s.c.size() < 2) return std::nullopt;
  int best = 1;
  for (std::size_t i = 2; i < s.c.size(); ++i)
    if (std::abs(s.c[i]) > std::abs(s.c[best])) best = int(i);
  if (std::abs(s.c[best]) > threshold * std::max(1.0, std::abs(s.c[0]))) return best;
  return std::nullopt;
}

std::vector<double> sample_cosine(const Domain1D& dom, double c0, double c1, double q) {
  std::vector<double> f(dom.N);
  const double ql = q * dom.l;
  const double k = std::round(ql);
  const bool integral = std::abs(ql - k) < 1e-12 && std::abs(k) < 1e9;
  for (int j = 0; j < dom.N; ++j)
    f[j] = c0 + c1 * (integral ? cos_mode(int(std::abs(k)), j, dom.N) : std::cos(q * dom.x(j)));
  return f;
}

}  // namespace nrd
