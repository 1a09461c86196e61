#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nrd/model.hpp"
#include "nrd/spectral.hpp"
#include "nrd/stability.hpp"

namespace nrd {

enum class BifKind { SteadyState, Hopf };
enum class Side { none, minus, plus };
std::string to_string(BifKind k);
std::string to_string(Side s);

struct BifurcationPoint {
  BifKind kind = BifKind::SteadyState;
  std::string param_name;  // d, beta or lambda
  double value = 0;
  int mode = 1;
  Side side = Side::none;
  std::string warning;
};

enum class Verdict { transcritical, supercritical_pitchfork, subcritical_pitchfork, degenerate };
std::string to_string(Verdict v);

struct DirectionCoefficients {
  double first = 0;   // d'(0) or beta'(0)
  double second = 0;  // d''(0) or beta''(0)
  Verdict verdict = Verdict::degenerate;
};

// A branch below the critical value sits on the unstable side, so a negative second derivative
// means a supercritical pitchfork.
Verdict direction_verdict(double first, double second, double tol = 1e-10);

// Bisection on a verified sign-changing bracket; returns the midpoint of the final bracket.
double bisect(const std::function<double(double)>& f, double a, double b, double tol = 1e-12);

// ---- scalar equation

std::vector<BifurcationPoint> scalar_bif_points(double f_u, double r, const Domain1D& dom, int i_max);
DirectionCoefficients scalar_direction(const Model& m, const Domain1D& dom, int i);

// ---- cooperative Lotka-Volterra

struct CoopBifurcation {
  std::vector<BifurcationPoint> points;  // beta_j, j = 1..j_max
  std::vector<double> h;                 // kernel slope c v*/(lambda_j + d v*) per point
};
double coop_beta(const CoopLV& m, double l, int j);
CoopBifurcation coop_bif_points(const CoopLV& m, double l, int j_max);

struct CoopDirectionTerms {
  double beta1 = 0, lambda1 = 0, h = 0;
  double Theta1_0 = 0, Theta1_2 = 0, Theta2_0 = 0, Theta2_2 = 0;
  double A = 0, B = 0;
  double theta_path = 0;  // (A + 3B/4) / (beta_1 lambda_1)
  double P = 0, Q = 0;
  double pq_path = 0;
};
CoopDirectionTerms coop_direction_terms(const CoopLV& m, double l);
// first = 0, second = the closed-form value (both paths must agree to 1e-6 relative).
DirectionCoefficients coop_direction(const CoopLV& m, double l);
// Curvature of the branch beta(s) for u = u* + s cos(x/l) + O(s^2): beta_1 times the closed form.
double coop_branch_curvature(const CoopLV& m, double l);
// Unique positive root of the dispersion determinant at d1 = beta, d2 = 1.
double coop_p_sharp(const CoopLV& m, double beta);

// ---- predator-prey with averaged prey competition

struct PredatorPreyCurves {
  double k = 0.5, theta = 1.0;

  PredatorPreyCurves(double k_, double theta_);
  double C1(double lam) const { return lam * (k - lam) / (k * (1 + lam)); }
  double C2(double lam) const { return lam * C1(lam); }
  double A(double lam) const { return (k - lam) / (k * (1 + lam)); }
  double lambda_star() const;
  double lambda_sharp() const;
  double M() const { return C2(lambda_sharp()) / (4 * theta); }
  double T(double lam, double p, double d1, double d2) const { return C1(lam) - (d1 + d2) * p; }
  double D(double lam, double p, double d1, double d2) const {
    return d1 * d2 * p * p - d2 * C1(lam) * p + theta * A(lam);
  }
  // Roots of D(lam, .) = 0; nullopt where they are complex.
  std::optional<double> p_minus(double lam, double d1, double d2) const;
  std::optional<double> p_plus(double lam, double d1, double d2) const;
  double l_hopf(double d1, double d2, int i) const;
};

struct SteadyWindow {
  double lam_lo = 0, lam_hi = 0;      // solutions of C2(lambda) = 4 theta d1/d2
  double lam_plus = 0, lam_minus = 0;  // maximizer of p_+ and minimizer of p_-
  double p_plus_max = 0, p_minus_min = 0;
  double l_steady_minus(int i) const;  // i / sqrt(p_+(lam_plus))
  double l_steady_plus(int i) const;   // i / sqrt(p_-(lam_minus))
};
// nullopt when d1/d2 >= C2(lambda_sharp)/(4 theta).
std::optional<SteadyWindow> pp_steady_window(const PredatorPreyCurves& c, double d1, double d2);

std::vector<BifurcationPoint> pp_hopf_points(const PredatorPreyCurves& c, double d1, double d2, double l,
                                             int n_max = 64);
std::vector<BifurcationPoint> pp_steady_points(const PredatorPreyCurves& c, double d1, double d2, double l,
                                               int i_max = 256);

enum class PPScenario { i, ii, iii, iv };
std::string to_string(PPScenario s);
PPScenario pp_scenario(const PredatorPreyCurves& c, double d1, double d2, double l);

}  // namespace nrd
