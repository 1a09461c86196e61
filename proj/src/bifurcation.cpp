#include "nrd/bifurcation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace nrd {

namespace {


void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::ParameterConstraintViolated, msg);
}

// Golden-section search for the maximizer of a unimodal f on [a, b].
double golden_max(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
  const double g = (std::sqrt(5.0) - 1) / 2;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

std::string to_string(BifKind k) { return k == BifKind::Hopf ? "Hopf" : "SteadyState"; }

std::string to_string(Side s) {
  switch (s) {
    case Side::minus: return "minus";
    case Side::plus: return "plus";
    default: return "none";
  }
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::transcritical: return "transcritical";
    case Verdict::supercritical_pitchfork: return "supercritical-pitchfork";
    case Verdict::subcritical_pitchfork: return "subcritical-pitchfork";
    default: return "degenerate";
  }
}

Verdict direction_verdict(double first, double second, double tol) {
  if (std::abs(first) > tol) return Verdict::transcritical;
  if (second < -tol) return Verdict::supercritical_pitchfork;
  if (second > tol) return Verdict::subcritical_pitchfork;
  return Verdict::degenerate;
}

double bisect(const std::function<double(double)>& f, double a, double b, double tol) {
  double fa = f(a), fb = f(b);
  if (fa == 0) return a;
  if (fb == 0) return b;
  if ((fa > 0) == (fb > 0)) {
    std::ostringstream os;
    os << "bisection bracket [" << a << ", " << b << "] has no sign change";
    throw Error(ErrorKind::InternalInconsistency, os.str());
  }
  while (std::abs(b - a) > tol) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if (fm == 0) return m;
    if ((fm > 0) == (fa > 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

// ---- scalar

std::vector<BifurcationPoint> scalar_bif_points(double f_u, double r, const Domain1D& dom, int i_max) {
  if (!(f_u > 0)) throw Error(ErrorKind::NotDestabilizable, "f_u <= 0: no steady-state bifurcation in d");
  std::vector<BifurcationPoint> out;
  for (int i = 1; i <= i_max; ++i) out.push_back({BifKind::SteadyState, "d", r * f_u / eigenvalue(dom, i), i, Side::none, {}});
  return out;
}

DirectionCoefficients scalar_direction(const Model& m, const Domain1D& dom, int i) {
  if (m.species() != 1) throw Error(ErrorKind::Usage, "scalar_direction needs a scalar model");
  if (i < 1) throw Error(ErrorKind::Usage, "mode index must be at least 1");
  const ScalarDerivatives s = m.scalar_derivatives();
  if (!(s.f_u > 0)) throw Error(ErrorKind::NotDestabilizable, "f_u <= 0: no steady-state bifurcation in d");
  const double r = m.r(), L = dom.length();
  const double lam = eigenvalue(dom, i), lam2 = eigenvalue(dom, 2 * i);
  const double di = r * s.f_u / lam;

  // integrals of cos^k(i x/l) over (0, l pi)
  const double I2 = L / 2, I3 = 0.0, I4 = 3 * L / 8;
  DirectionCoefficients out;
  out.first = di * s.f_uu * I3 / (2 * s.f_u * I2);

  // w = w0 + w2 cos(2 i x/l) solves the second-order correction problem exactly
  const double w0 = -r * s.f_uu / 2 / (r * (s.f_u + s.f_ubar));
  const double w2 = -r * s.f_uu / 2 / (-di * lam2 + r * s.f_u);
  const double Iw = L * (w0 / 2 + w2 / 4);
  const double Iwbar = w0 * L / 2;
  out.second = (di * s.f_uuu * I4 + 3 * di * s.f_uu * Iw + 3 * di * s.f_uubar * Iwbar) / (3 * s.f_u * I2);

  out.verdict = direction_verdict(out.first, out.second);
  if (out.verdict == Verdict::degenerate)
    throw Error(ErrorKind::DegenerateBifurcation, "both d'(0) and d''(0) vanish");
  return out;
}

// ---- cooperative

namespace {
void require_unit_r(const CoopLV& m) { require(m.r() == 1.0, "coop closed forms assume r = 1"); }
}  // namespace

double coop_beta(const CoopLV& m, double l, int j) {
  require_unit_r(m);
  auto [u, v] = m.equilibrium().values;
  const double lam = eigenvalue(l, j);
  return m.b() * m.c() * u * v / (lam * (lam + m.d() * v));
}

CoopBifurcation coop_bif_points(const CoopLV& m, double l, int j_max) {
  require_unit_r(m);
  auto [u, v] = m.equilibrium().values;
  CoopBifurcation out;
  for (int j = 1; j <= j_max; ++j) {
    out.points.push_back({BifKind::SteadyState, "beta", coop_beta(m, l, j), j, Side::none, {}});
    out.h.push_back(m.c() * v / (eigenvalue(l, j) + m.d() * v));
  }
  return out;
}

CoopDirectionTerms coop_direction_terms(const CoopLV& m, double l) {
  require_unit_r(m);
  const double a = m.a(), b = m.b(), c = m.c(), d = m.d();
  auto [u, v] = m.equilibrium().values;
  const double D = a * d - b * c;
  CoopDirectionTerms t;
  const double L = eigenvalue(l, 1);
  const double b1 = coop_beta(m, l, 1);
  const double h = c * v / (L + d * v);
  t.beta1 = b1;
  t.lambda1 = L;
  t.h = h;

  // Theta path; the c_* token in Theta1_0 is read as c u*, and Theta2_0 carries the factor h
  const double den = b * c * u * v - 4 * d * b1 * L * v - 16 * b1 * L * L;
  t.Theta1_0 = b * h * (-d * h * u + c * u + d * v) / (D * u * v);
  t.Theta1_2 = -b * h * (-d * h * u + c * u + d * v + 4 * L) / den;
  t.Theta2_0 = h * (a * u * (c - d * h) + b * c * v) / (D * u * v);
  t.Theta2_2 = -h * (b * c * v + 4 * c * b1 * L - 4 * d * h * b1 * L) / den;
  const double kap = b1 * L / (h * (L + d * v));
  t.A = (-a * t.Theta1_0 + b * h * (t.Theta1_0 - t.Theta1_2) + b * (t.Theta2_0 - t.Theta2_2)) +
        kap * (c * h * (t.Theta1_0 - t.Theta1_2) + (c - 2 * d * h) * (t.Theta2_0 - t.Theta2_2));
  t.B = (2 * b * h * t.Theta1_2 + 2 * b * t.Theta2_2) + kap * (2 * c * h * t.Theta1_2 + 2 * (c - 2 * d * h) * t.Theta2_2);
  t.theta_path = (t.A + 0.75 * t.B) / (b1 * L);

  // polynomial path
  const double u2 = u * u, v2 = v * v, v3 = v2 * v, v4 = v3 * v, v5 = v4 * v;
  const double c2 = c * c, c3 = c2 * c, d2 = d * d, d3 = d2 * d, d4 = d3 * d;
  const double L2 = L * L, L3 = L2 * L, L4 = L3 * L;
  t.P = 6 * b * c * d4 * v5 - 4 * D * d4 * v5 - 9 * a * c2 * d2 * L * u2 * v2 + 10 * a * c * d3 * L * u * v3 -
        37 * a * d4 * L * v4 + 9 * b * c3 * d * L * u2 * v2 + 2 * b * c2 * d2 * L * u * v3 + 79 * b * c * d3 * L * v4 -
        19 * a * c2 * d * L2 * u2 * v + 20 * a * c * d2 * L2 * u * v2 - 87 * a * d3 * L2 * v3 +
        25 * b * c3 * L2 * u2 * v + 52 * b * c2 * d * L2 * u * v2 + 153 * b * c * d2 * L2 * v3 +
        30 * a * c2 * L3 * u2 + 10 * a * c * d * L3 * u * v - 79 * a * d2 * L3 * v2 + 50 * b * c2 * L3 * u * v +
        109 * b * c * d * L3 * v2 - 25 * D * L4 * v;
  t.Q = 6 * (d3 * v3 + 7 * d2 * L * v2 + 11 * d * L2 * v + 5 * L3) * (d * v * D + D * L) * v * u2;
  t.pq_path = t.P / t.Q;
  return t;
}

DirectionCoefficients coop_direction(const CoopLV& m, double l) {
  const CoopDirectionTerms t = coop_direction_terms(m, l);
  const double scale = std::max(std::abs(t.theta_path), std::abs(t.pq_path));
  if (std::abs(t.theta_path - t.pq_path) > 1e-6 * scale) {
    std::ostringstream os;
    os.precision(12);
    os << "Theta path " << t.theta_path << " and P/Q path " << t.pq_path << " disagree";
    throw Error(ErrorKind::InternalInconsistency, os.str());
  }
  DirectionCoefficients out;
  out.first = 0.0;  // the quadratic term is proportional to the integral of cos^3 over (0, l pi)
  out.second = t.pq_path;
  out.verdict = direction_verdict(out.first, out.second);
  return out;
}

double coop_branch_curvature(const CoopLV& m, double l) {
  const CoopDirectionTerms t = coop_direction_terms(m, l);
  return t.beta1 * t.pq_path;
}

double coop_p_sharp(const CoopLV& m, double beta) {
  require(beta > 0, "beta must be positive");
  const DispersionData s = dispersion(m.jacobians(beta, 1.0));
  if (!s.p_plus || *s.p_plus <= 0) throw Error(ErrorKind::InternalInconsistency, "no positive root");
  return *s.p_plus;
}

// ---- predator-prey

PredatorPreyCurves::PredatorPreyCurves(double k_, double theta_) : k(k_), theta(theta_) {
  require(k > 0 && k <= 1, "predator-prey analysis requires 0 < k <= 1");
  require(theta > 0, "theta must be positive");
}

double PredatorPreyCurves::lambda_star() const { return std::sqrt(k + 1) - 1; }

double PredatorPreyCurves::lambda_sharp() const {
  return (k - 3 + std::sqrt((k - 3) * (k - 3) + 16 * k)) / 4;
}

std::optional<double> PredatorPreyCurves::p_minus(double lam, double d1, double d2) const {
  const double b = d2 * C1(lam), disc = b * b - 4 * d1 * d2 * theta * A(lam);
  if (disc < 0) return std::nullopt;
  return (b - std::sqrt(disc)) / (2 * d1 * d2);
}

std::optional<double> PredatorPreyCurves::p_plus(double lam, double d1, double d2) const {
  const double b = d2 * C1(lam), disc = b * b - 4 * d1 * d2 * theta * A(lam);
  if (disc < 0) return std::nullopt;
  return (b + std::sqrt(disc)) / (2 * d1 * d2);
}

double PredatorPreyCurves::l_hopf(double d1, double d2, int i) const {
  return i * std::sqrt((d1 + d2) / C1(lambda_star()));
}

double SteadyWindow::l_steady_minus(int i) const { return i / std::sqrt(p_plus_max); }
double SteadyWindow::l_steady_plus(int i) const { return i / std::sqrt(p_minus_min); }

std::optional<SteadyWindow> pp_steady_window(const PredatorPreyCurves& c, double d1, double d2) {
  require(d1 > 0 && d2 > 0, "diffusion coefficients must be positive");
  const double ratio = d1 / d2;
  if (!(ratio < c.M())) return std::nullopt;
  const double ls = c.lambda_sharp();
  auto g = [&](double lam) { return c.C2(lam) / (4 * c.theta) - ratio; };
  SteadyWindow w;
  w.lam_lo = bisect(g, 0.0, ls);
  w.lam_hi = bisect(g, ls, c.k);
  // the discriminant vanishes at the window ends, so clamp tiny negative values there
  auto disc_safe = [&](double lam, bool plus) {
    const double b = d2 * c.C1(lam), D = std::max(0.0, b * b - 4 * d1 * d2 * c.theta * c.A(lam));
    return (b + (plus ? 1 : -1) * std::sqrt(D)) / (2 * d1 * d2);
  };
  w.lam_plus = golden_max([&](double lam) { return disc_safe(lam, true); }, w.lam_lo, w.lam_hi);
  w.lam_minus = golden_max([&](double lam) { return -disc_safe(lam, false); }, w.lam_lo, w.lam_hi);
  w.p_plus_max = disc_safe(w.lam_plus, true);
  w.p_minus_min = disc_safe(w.lam_minus, false);
  return w;
}

std::vector<BifurcationPoint> pp_hopf_points(const PredatorPreyCurves& c, double d1, double d2, double l, int n_max) {
  require(d1 > 0 && d2 > 0 && l > 0, "d1, d2 and l must be positive");
  std::vector<BifurcationPoint> out;
  const double ls = c.lambda_star(), cmax = c.C1(ls);
  for (int n = 1; n <= n_max; ++n) {
    const double p = eigenvalue(l, n);
    const double target = (d1 + d2) * p;
    if (target >= cmax) break;
    auto f = [&](double lam) { return c.C1(lam) - target; };
    const double lm = bisect(f, 0.0, ls), lp = bisect(f, ls, c.k);
    if (c.D(lm, p, d1, d2) > 0) out.push_back({BifKind::Hopf, "lambda", lm, n, Side::minus, {}});
    if (c.D(lp, p, d1, d2) > 0) out.push_back({BifKind::Hopf, "lambda", lp, n, Side::plus, {}});
  }
  return out;
}

std::vector<BifurcationPoint> pp_steady_points(const PredatorPreyCurves& c, double d1, double d2, double l,
                                               int i_max) {
  require(l > 0, "l must be positive");
  std::vector<BifurcationPoint> out;
  const auto win = pp_steady_window(c, d1, d2);
  if (!win) return out;
  const SteadyWindow& w = *win;
  auto pp = [&](double lam) {
    const double b = d2 * c.C1(lam), D = std::max(0.0, b * b - 4 * d1 * d2 * c.theta * c.A(lam));
    return (b + std::sqrt(D)) / (2 * d1 * d2);
  };
  auto pm = [&](double lam) {
    const double b = d2 * c.C1(lam), D = std::max(0.0, b * b - 4 * d1 * d2 * c.theta * c.A(lam));
    return (b - std::sqrt(D)) / (2 * d1 * d2);
  };
  struct Piece {
    std::function<double(double)> f;
    double a, b;
  };
  const std::vector<Piece> pieces = {
      {pp, w.lam_lo, w.lam_plus}, {pp, w.lam_plus, w.lam_hi}, {pm, w.lam_lo, w.lam_minus}, {pm, w.lam_minus, w.lam_hi}};

  for (int i = 1; i <= i_max; ++i) {
    const double p = eigenvalue(l, i);
    if (p >= w.p_plus_max) break;
    if (p <= w.p_minus_min) continue;
    std::vector<double> roots;
    for (const auto& pc : pieces) {
      const double fa = pc.f(pc.a) - p, fb = pc.f(pc.b) - p;
      if ((fa > 0) == (fb > 0)) continue;
      const double r = bisect([&](double lam) { return pc.f(lam) - p; }, pc.a, pc.b);
      if (std::none_of(roots.begin(), roots.end(), [&](double q) { return std::abs(q - r) < 1e-9; }))
        roots.push_back(r);
    }
    std::sort(roots.begin(), roots.end());
    for (std::size_t k = 0; k < roots.size(); ++k) {
      BifurcationPoint bp{BifKind::SteadyState, "lambda", roots[k], i, k == 0 ? Side::minus : Side::plus, {}};
      if (roots.size() != 2) bp.warning = "expected two crossings, found " + std::to_string(roots.size());
      out.push_back(bp);
    }
  }
  for (std::size_t a = 0; a < out.size(); ++a)
    for (std::size_t b = a + 1; b < out.size(); ++b)
      if (out[a].mode != out[b].mode && std::abs(out[a].value - out[b].value) < 1e-8) {
        const std::string msg = "modes " + std::to_string(out[a].mode) + " and " + std::to_string(out[b].mode) +
                                " bifurcate at the same lambda";
        out[a].warning = out[b].warning = msg;
      }
  return out;
}

std::string to_string(PPScenario s) {
  switch (s) {
    case PPScenario::i: return "i";
    case PPScenario::ii: return "ii";
    case PPScenario::iii: return "iii";
    default: return "iv";
  }
}

PPScenario pp_scenario(const PredatorPreyCurves& c, double d1, double d2, double l) {
  const double lH = c.l_hopf(d1, d2, 1);
  const auto win = pp_steady_window(c, d1, d2);
  if (!win) return l > lH ? PPScenario::ii : PPScenario::i;
  const double lS = win->l_steady_minus(1);
  const bool hopf = l > lH, steady = l > lS;
  if (hopf && steady) return PPScenario::iv;
  if (steady) return PPScenario::iii;
  if (hopf) return PPScenario::ii;
  return PPScenario::i;
}

}  // namespace nrd
