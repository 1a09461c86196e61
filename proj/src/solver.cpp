#include "nrd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "nrd/stability.hpp"

namespace nrd {

std::string to_string(StepperKind s) { return s == StepperKind::IMEX ? "imex" : "rk4"; }

std::string to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::ConstantSteady: return "ConstantSteady";
    case OutcomeKind::PatternedSteady: return "PatternedSteady";
    case OutcomeKind::PeriodicOrbit: return "PeriodicOrbit";
    default: return "Undecided";
  }
}

// ---- initial conditions

InitialCondition InitialCondition::cosine(CosineProfile u, std::optional<CosineProfile> v) {
  InitialCondition ic;
  ic.closed[0] = u;
  ic.closed[1] = v;
  return ic;
}

InitialCondition InitialCondition::profile(std::vector<double> u, std::vector<double> v) {
  InitialCondition ic;
  ic.sampled[0] = std::move(u);
  ic.sampled[1] = std::move(v);
  return ic;
}

InitialCondition InitialCondition::perturbed_equilibrium(const Model& m, double l, double eps, int mode) {
  const Equilibrium eq = m.equilibrium();
  const double q = mode / l;
  InitialCondition ic;
  ic.closed[0] = CosineProfile{eq.values[0], eps, q};
  if (m.species() == 2) ic.closed[1] = CosineProfile{eq.values[1], eps, q};
  return ic;
}

std::array<std::vector<double>, 2> InitialCondition::sample(const Domain1D& dom, int species) const {
  std::array<std::vector<double>, 2> out;
  for (int k = 0; k < species; ++k) {
    if (closed[k]) {
      out[k] = sample_cosine(dom, closed[k]->c0, closed[k]->c1, closed[k]->q);
    } else if (!sampled[k].empty()) {
      if (sampled[k].size() != std::size_t(dom.N))
        throw Error(ErrorKind::LengthMismatch, "initial profile length does not match the grid");
      out[k] = sampled[k];
    } else {
      throw Error(ErrorKind::Usage, "initial condition missing for species " + std::to_string(k + 1));
    }
  }
  return out;
}

void SimConfig::validate(int species) const {
  auto bad = [](const std::string& m) { throw Error(ErrorKind::ParameterConstraintViolated, m); };
  if (!(dt > 0)) bad("dt must be positive");
  if (!(t_end > dt)) bad("t_end must exceed dt");
  if (snapshot_every < 1) bad("snapshot_every must be at least 1");
  if (!(d1 > 0) || (species == 2 && !(d2 > 0))) bad("diffusion coefficients must be positive");
  if (stepper == StepperKind::RK4) {
    const double dmax = species == 2 ? std::max(d1, d2) : d1;
    const double h = domain.h();
    if (dt > 0.4 * h * h / dmax) {
      std::ostringstream os;
      os << "explicit RK4 needs dt <= " << 0.4 * h * h / dmax << " on this grid";
      bad(os.str());
    }
  }
}

// ---- integrator

Integrator::Integrator(const Model& m, const SimConfig& cfg) : m_(m), cfg_(cfg), n_(cfg.domain.N) {
  cfg_.validate(m.species());
  const double h = cfg_.domain.h();
  const std::array<double, 2> d{cfg_.d1, cfg_.d2};
  for (int k = 0; k < 2; ++k) {
    alpha_[k] = d[k] * cfg_.dt / (h * h);
    const double a = alpha_[k];
    cprime_[k].assign(n_, 0.0);
    inv_[k].assign(n_, 0.0);
    double prev = 0.0;
    for (int j = 0; j < n_; ++j) {
      const double diag = (j == 0 || j == n_ - 1) ? 1 + a : 1 + 2 * a;
      const double den = diag + a * prev;
      inv_[k][j] = 1.0 / den;
      cprime_[k][j] = -a * inv_[k][j];
      prev = cprime_[k][j];
    }
  }
  fu_.resize(n_);
  fv_.resize(n_);
  tmp_.resize(n_);
  rev_.resize(n_);
  for (auto& b : rk_) b.resize(n_);
}

namespace {

void thomas(std::vector<double>& x, double a, const std::vector<double>& cp, const std::vector<double>& inv) {
  const int n = int(x.size());
  x[0] *= inv[0];
  for (int j = 1; j < n; ++j) x[j] = (x[j] + a * x[j - 1]) * inv[j];
  for (int j = n - 2; j >= 0; --j) x[j] -= cp[j] * x[j + 1];
}

double mean(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v;
  return s / double(x.size());
}

}  // namespace

// Backward-Euler diffusion solve, averaged with the solve of the mirrored system so that the
// step commutes exactly with the reflection x -> l pi - x.
void Integrator::solve(int k, std::vector<double>& x) {
  std::reverse_copy(x.begin(), x.end(), rev_.begin());
  thomas(rev_, alpha_[k], cprime_[k], inv_[k]);
  thomas(x, alpha_[k], cprime_[k], inv_[k]);
  for (int j = 0; j < n_; ++j) x[j] = 0.5 * (x[j] + rev_[n_ - 1 - j]);
}

void Integrator::step_imex(State& s) {
  const bool two = m_.species() == 2;
  const double ub = mean(s.u), vb = two ? mean(s.v) : 0.0;
  m_.rates_field(s.u.data(), two ? s.v.data() : nullptr, ub, vb, fu_.data(), two ? fv_.data() : nullptr, n_);
  for (int j = 0; j < n_; ++j) s.u[j] += cfg_.dt * fu_[j];
  solve(0, s.u);
  if (two) {
    for (int j = 0; j < n_; ++j) s.v[j] += cfg_.dt * fv_[j];
    solve(1, s.v);
  }
}

void Integrator::rhs(const std::vector<double>& u, const std::vector<double>& v, std::vector<double>& du,
                     std::vector<double>& dv) const {
  const bool two = m_.species() == 2;
  const double ub = mean(u), vb = two ? mean(v) : 0.0;
  m_.rates_field(u.data(), two ? v.data() : nullptr, ub, vb, du.data(), two ? dv.data() : nullptr, n_);
  const double h2 = cfg_.domain.h() * cfg_.domain.h();
  auto add_lap = [&](const std::vector<double>& w, std::vector<double>& dw, double d) {
    const double c = d / h2;
    for (int j = 0; j < n_; ++j) {
      const double left = w[j == 0 ? 0 : j - 1], right = w[j == n_ - 1 ? n_ - 1 : j + 1];
      dw[j] += c * ((left + right) - 2 * w[j]);
    }
  };
  add_lap(u, du, cfg_.d1);
  if (two) add_lap(v, dv, cfg_.d2);
}

void Integrator::step_rk4(State& s) {
  const bool two = m_.species() == 2;
  auto& [k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v] = rk_;
  const double dt = cfg_.dt;
  std::vector<double> su(n_), sv(two ? n_ : 0);
  rhs(s.u, s.v, k1u, k1v);
  for (int j = 0; j < n_; ++j) su[j] = s.u[j] + 0.5 * dt * k1u[j];
  if (two)
    for (int j = 0; j < n_; ++j) sv[j] = s.v[j] + 0.5 * dt * k1v[j];
  rhs(su, sv, k2u, k2v);
  for (int j = 0; j < n_; ++j) su[j] = s.u[j] + 0.5 * dt * k2u[j];
  if (two)
    for (int j = 0; j < n_; ++j) sv[j] = s.v[j] + 0.5 * dt * k2v[j];
  rhs(su, sv, k3u, k3v);
  for (int j = 0; j < n_; ++j) su[j] = s.u[j] + dt * k3u[j];
  if (two)
    for (int j = 0; j < n_; ++j) sv[j] = s.v[j] + dt * k3v[j];
  rhs(su, sv, k4u, k4v);
  for (int j = 0; j < n_; ++j) s.u[j] += dt / 6 * (k1u[j] + 2 * k2u[j] + 2 * k3u[j] + k4u[j]);
  if (two)
    for (int j = 0; j < n_; ++j) s.v[j] += dt / 6 * (k1v[j] + 2 * k2v[j] + 2 * k3v[j] + k4v[j]);
}

void Integrator::guard(const State& s) {
  bool negative = false;
  auto check = [&](const std::vector<double>& w) {
    for (double x : w) {
      if (!std::isfinite(x) || std::abs(x) > 1e6) {
        std::ostringstream os;
        os << "density left the admissible range at t=" << s.t;
        throw Error(ErrorKind::NonFiniteState, os.str());
      }
      negative |= x < 0;
    }
  };
  check(s.u);
  if (m_.species() == 2) check(s.v);
  if (negative && m_.population()) ++negative_steps_;
}

void Integrator::step(State& s) {
  if (cfg_.stepper == StepperKind::IMEX)
    step_imex(s);
  else
    step_rk4(s);
  s.t += cfg_.dt;
  guard(s);
}

double Integrator::residual(const State& s) const {
  std::vector<double> du(n_), dv(n_);
  rhs(s.u, s.v, du, dv);
  double r = 0;
  for (double x : du) r = std::max(r, std::abs(x));
  if (m_.species() == 2)
    for (double x : dv) r = std::max(r, std::abs(x));
  return r;
}

State step(const State& s, const Model& m, const SimConfig& cfg) {
  Integrator it(m, cfg);
  State out = s;
  it.step(out);
  return out;
}

// ---- trajectory and outcome

ModeSpectrum Trajectory::spectrum(std::size_t frame, int species_index) const {
  return decompose(species_index == 0 ? u.at(frame) : v.at(frame), domain);
}

std::string Outcome::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  if (kind == OutcomeKind::PatternedSteady) os << "(" << mode << ")";
  if (kind == OutcomeKind::PeriodicOrbit) os << "(" << mode << ", period " << period << ")";
  return os.str();
}

namespace {

struct Extremum {
  double t, value;
};

// Interior maxima (sign = +1) or minima (sign = -1), located where the linearly interpolated
// difference quotient crosses zero.
std::vector<Extremum> extrema(const std::vector<double>& t, const std::vector<double>& y, int sign) {
  std::vector<Extremum> out;
  for (std::size_t k = 0; k + 2 < y.size(); ++k) {
    const double a = sign * (y[k + 1] - y[k]), b = sign * (y[k + 2] - y[k + 1]);
    if (a > 0 && b <= 0) {
      const double ta = 0.5 * (t[k] + t[k + 1]), tb = 0.5 * (t[k + 1] + t[k + 2]);
      const double tz = ta + (tb - ta) * a / (a - b);
      out.push_back({tz, y[k + 1]});
    }
  }
  return out;
}

}  // namespace

Outcome classify_trajectory(const Trajectory& tr, bool steady, double last_residual, double mode_threshold) {
  Outcome out;
  out.residual = last_residual;
  out.t_final = tr.times.empty() ? 0.0 : tr.times.back();
  if (tr.frames() == 0) return out;

  if (steady) {
    const auto dm = dominant_mode(tr.spectrum(tr.frames() - 1), mode_threshold);
    out.kind = dm ? OutcomeKind::PatternedSteady : OutcomeKind::ConstantSteady;
    out.mode = dm.value_or(0);
    return out;
  }

  // analysis window: second half of the run
  std::size_t first = 0;
  while (first < tr.frames() && tr.times[first] < 0.5 * out.t_final) ++first;
  std::vector<double> t(tr.times.begin() + first, tr.times.end());
  std::vector<double> y(tr.l2.begin() + first, tr.l2.end());
  if (y.size() < 8) return out;

  const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
  const double amp = *mx - *mn;
  const double level = std::accumulate(y.begin(), y.end(), 0.0) / double(y.size());
  out.amplitude = amp;
  if (!(amp > 1e-7 * std::max(1.0, level))) return out;

  // major peaks only, so that a secondary bump per cycle is not counted as a period
  std::vector<Extremum> peaks;
  for (const auto& e : extrema(t, y, +1))
    if (e.value > *mn + 0.5 * amp) peaks.push_back(e);
  if (peaks.size() < 6) return out;

  std::vector<double> periods;
  for (std::size_t k = 1; k < peaks.size(); ++k) periods.push_back(peaks[k].t - peaks[k - 1].t);

  // longest trailing run of near-equal periods with near-equal peak heights
  int K = 0;
  double spread = 0, mean_period = 0;
  for (int n = 2; n <= int(periods.size()); ++n) {
    const auto pb = periods.end() - n;
    const auto [pmn, pmx] = std::minmax_element(pb, periods.end());
    const double pmean = std::accumulate(pb, periods.end(), 0.0) / n;
    const auto hb = peaks.end() - (n + 1);
    const auto [hmn, hmx] =
        std::minmax_element(hb, peaks.end(), [](const Extremum& a, const Extremum& b) { return a.value < b.value; });
    const double pspread = (*pmx - *pmn) / pmean;
    auto from = std::lower_bound(t.begin(), t.end(), hb->t);
    const auto [lmn, lmx] = std::minmax_element(y.begin() + (from - t.begin()), y.end());
    const double hspread = (hmx->value - hmn->value) / (*lmx - *lmn);
    if (pspread >= 0.02 || hspread >= 0.02) break;
    K = n;
    spread = pspread;
    mean_period = pmean;
  }
  out.periods_used = K;
  out.period_spread = spread;
  if (K < 5) return out;

  // mode: largest time-RMS cosine coefficient over the window
  std::vector<double> ms(tr.domain.N, 0.0);
  for (std::size_t f = first; f < tr.frames(); ++f) {
    const ModeSpectrum s = tr.spectrum(f);
    for (int i = 1; i < tr.domain.N; ++i) ms[i] += s.c[i] * s.c[i];
  }
  out.mode = int(std::max_element(ms.begin() + 1, ms.end()) - ms.begin());
  out.kind = OutcomeKind::PeriodicOrbit;
  out.period = mean_period;
  return out;
}

RunResult run(const Model& m, const SimConfig& cfg) {
  const int species = m.species();
  cfg.validate(species);
  Integrator it(m, cfg);
  auto init = cfg.ic.sample(cfg.domain, species);
  if (m.population())
    for (int k = 0; k < species; ++k)
      for (double x : init[k])
        if (x < 0) throw Error(ErrorKind::ParameterConstraintViolated, "initial densities must be non-negative");

  State s{0.0, std::move(init[0]), std::move(init[1])};
  RunResult res;
  Trajectory& tr = res.trajectory;
  tr.species = species;
  tr.domain = cfg.domain;
  const double h = cfg.domain.h();

  auto record = [&](double r) {
    tr.times.push_back(s.t);
    tr.u.push_back(s.u);
    tr.avg_u.push_back(spatial_average(s.u, cfg.domain));
    double sq = 0;
    for (double x : s.u) sq += x * x;
    if (species == 2) {
      tr.v.push_back(s.v);
      tr.avg_v.push_back(spatial_average(s.v, cfg.domain));
      for (double x : s.v) sq += x * x;
    }
    tr.l2.push_back(std::sqrt(h * sq));
    tr.residual.push_back(r);
  };

  double r = it.residual(s);
  record(r);
  const long long steps = std::llround(cfg.t_end / cfg.dt);
  int below = 0;
  for (long long k = 1; k <= steps; ++k) {
    it.step(s);
    s.t = double(k) * cfg.dt;
    if (k % cfg.snapshot_every == 0) {
      r = it.residual(s);
      record(r);
      below = r < cfg.steady_tol ? below + 1 : 0;
      if (cfg.early_exit && below >= cfg.steady_snapshots) break;
    }
  }
  res.outcome = classify_trajectory(tr, below >= cfg.steady_snapshots, r, cfg.mode_threshold);
  res.outcome.negative_steps = it.negative_steps();
  return res;
}

// ---- growth-rate probe

GrowthEstimate growth_rate_probe(const Model& m, const SimConfig& cfg_in, int i, double eps_rel) {
  if (i < 1) throw Error(ErrorKind::Usage, "probe mode must be at least 1");
  if (!(eps_rel > 0 && eps_rel <= 1e-3))
    throw Error(ErrorKind::ParameterConstraintViolated, "perturbation must be at most 1e-3 of the equilibrium scale");
  SimConfig cfg = cfg_in;
  cfg.early_exit = false;
  const int species = m.species();
  const Equilibrium eq = m.equilibrium();
  const Domain1D& dom = cfg.domain;

  Eigen::Vector2d dir(1.0, 0.0);
  if (species == 2) {
    const JacobianData J = m.jacobians(cfg.d1, cfg.d2);
    Eigen::EigenSolver<Eigen::Matrix2d> es(block_at(J, eigenvalue(dom, i), false));
    const int lead = es.eigenvalues()[0].real() >= es.eigenvalues()[1].real() ? 0 : 1;
    Eigen::Vector2cd ev = es.eigenvectors().col(lead);
    dir = ev.real();
    if (dir.norm() < 1e-8) dir = ev.imag();
    dir /= dir.cwiseAbs().maxCoeff();
  }
  const double scale = std::max({std::abs(eq.values[0]), species == 2 ? std::abs(eq.values[1]) : 0.0, 1e-12});
  const double eps = eps_rel * scale;

  State s;
  s.u.resize(dom.N);
  if (species == 2) s.v.resize(dom.N);
  for (int j = 0; j < dom.N; ++j) {
    const double c = cos_mode(i, j, dom.N);
    s.u[j] = eq.values[0] + eps * dir[0] * c;
    if (species == 2) s.v[j] = eq.values[1] + eps * dir[1] * c;
  }

  Integrator it(m, cfg);
  auto project = [&](const std::vector<double>& w) {
    double acc = 0;
    for (int j = 0; j < dom.N; ++j) acc += w[j] * cos_mode(i, j, dom.N);
    return 2 * acc / dom.N;
  };
  std::vector<double> times;
  std::vector<Eigen::Vector2d> amps;
  const double a0 = eps * dir.norm();
  auto sample = [&]() {
    Eigen::Vector2d a(project(s.u), species == 2 ? project(s.v) : 0.0);
    times.push_back(s.t);
    amps.push_back(a);
    return a.norm();
  };
  sample();
  const long long steps = std::llround(cfg.t_end / cfg.dt);
  for (long long k = 1; k <= steps; ++k) {
    it.step(s);
    if (k % cfg.snapshot_every == 0) {
      const double a = sample();
      if (a > 10 * a0 || a < 1e-6 * a0) break;
    }
  }
  const int K = int(amps.size());
  if (K < 20) throw Error(ErrorKind::WindowTooShort, "linear window holds " + std::to_string(K) + " snapshots");
  const double dT = cfg.dt * cfg.snapshot_every;

  GrowthEstimate g;
  g.window = K;
  if (species == 2) {
    // one-step propagator fitted by least squares
    Eigen::Matrix2d XX = Eigen::Matrix2d::Zero(), YX = Eigen::Matrix2d::Zero();
    for (int k = 0; k + 1 < K; ++k) {
      XX += amps[k] * amps[k].transpose();
      YX += amps[k + 1] * amps[k].transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> sx(XX);
    if (sx.eigenvalues()[0] > 1e-10 * sx.eigenvalues()[1]) {
      Eigen::EigenSolver<Eigen::Matrix2d> es(YX * XX.inverse());
      const auto mu0 = es.eigenvalues()[0], mu1 = es.eigenvalues()[1];
      if (mu0.imag() != 0.0) {
        const auto mu = std::abs(mu0) >= std::abs(mu1) ? mu0 : mu1;
        g.rate = std::log(std::abs(mu)) / dT;
        g.frequency = std::abs(std::arg(mu)) / dT;
        return g;
      }
    }
  }
  // real leading eigenvalue: least-squares slope of log amplitude
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (int k = 0; k < K; ++k) {
    const double y = std::log(amps[k].norm());
    st += times[k];
    sy += y;
    stt += times[k] * times[k];
    sty += times[k] * y;
  }
  g.rate = (K * sty - st * sy) / (K * stt - st * st);
  return g;
}

// ---- averaged ODE

GeneralAveragedLogistic as_general(const MembraneFeedback& m) {
  const auto c = m.general_form();
  return GeneralAveragedLogistic(c[0], c[1], c[2], c[3], c[4], m.r());
}

std::vector<std::pair<double, double>> averaged_ode_reduce(const GeneralAveragedLogistic& m, double ic_mean,
                                                           double t_end, double dt) {
  if (!(dt > 0) || !(t_end > 0)) throw Error(ErrorKind::ParameterConstraintViolated, "dt and t_end must be positive");
  const long long n = std::llround(t_end / dt);
  std::vector<std::pair<double, double>> out;
  out.reserve(n + 1);
  double y = ic_mean;
  out.emplace_back(0.0, y);
  for (long long k = 1; k <= n; ++k) {
    const double k1 = m.mean_rhs(y), k2 = m.mean_rhs(y + 0.5 * dt * k1), k3 = m.mean_rhs(y + 0.5 * dt * k2),
                 k4 = m.mean_rhs(y + dt * k3);
    y += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    out.emplace_back(double(k) * dt, y);
  }
  return out;
}

}  // namespace nrd
