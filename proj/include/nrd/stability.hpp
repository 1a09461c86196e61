#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nrd/model.hpp"
#include "nrd/spectral.hpp"

namespace nrd {

// Trace and determinant of J_U - p D as functions of p.
struct DispersionData {
  double fu = 0, fv = 0, gu = 0, gv = 0, d1 = 1, d2 = 1;
  double tr = 0, det = 0;
  double b = 0;      // d1 g_v + d2 f_u
  double Delta = 0;  // b^2 - 4 d1 d2 Det(J_U)
  double p_star = 0;
  std::optional<double> p_minus, p_plus;  // real roots of D, present when Delta > 0

  double T(double p) const { return tr - (d1 + d2) * p; }
  double D(double p) const { return d1 * d2 * p * p - b * p + det; }
};

DispersionData dispersion(const JacobianData& J);

// mu_0 = r (f_u + f_ubar), mu_i = -d lambda_i + r f_u; f_u, f_ubar are raw partials.
std::vector<double> scalar_mode_eigenvalues(double f_u, double f_ubar, double r, double d, const Domain1D& dom,
                                            int i_max);
// r f_u / lambda_1; NotDestabilizable when f_u <= 0.
double scalar_critical_diffusion(double f_u, double r, const Domain1D& dom);

// (J_i, J~_i) for mode i: -lambda_i D + J_U and -lambda_i D + J_U + J_Ubar; both equal J_U + J_Ubar at i = 0.
std::pair<Eigen::Matrix2d, Eigen::Matrix2d> block_matrices(const JacobianData& J, double l, int i);
// Same with an arbitrary Laplacian symbol in place of i^2/l^2.
Eigen::Matrix2d block_at(const JacobianData& J, double lambda, bool i_zero);

enum class CaseLabel { i, ii_a, ii_b, ii_c, ii_d, iii_a, iii_b, iv_a, iv_b, none };
std::string to_string(CaseLabel c);

struct Interval {
  double lo = 0, hi = 0;
  bool contains(double p) const { return p > lo && p < hi; }
};

struct InstabilityReport {
  CaseLabel label = CaseLabel::none;
  DispersionData disp;
  std::vector<Interval> I_S, I_H;
  std::vector<int> steady_modes, hopf_modes;  // filled when a domain length is given

  bool in_S(double p) const;
  bool in_H(double p) const;
};

// Requires J_U + J_Ubar stable (BaseStateUnstable otherwise) and Tr, Det of J_U away from zero
// (DegenerateCase). Case iv-a, where neither instability can occur, is labelled iv-a.
InstabilityReport classify(const JacobianData& J);
InstabilityReport classify(const JacobianData& J, double l);
void fill_admissible_modes(InstabilityReport& rep, double l);

// Brute-force check of I_S and I_H from eigenvalues of J_U - p D on a log-uniform grid.
// Throws MismatchAt on the first disagreement.
bool verify_intervals(const JacobianData& J, const InstabilityReport& rep, int grid_size = 1000);

bool is_stable(const Eigen::Matrix2d& A);

}  // namespace nrd
