#include "nrd/stability.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

namespace nrd {

DispersionData dispersion(const JacobianData& J) {
  if (J.species != 2) throw Error(ErrorKind::Usage, "dispersion functions need a two-species model");
  DispersionData s;
  s.fu = J.fu();
  s.fv = J.fv();
  s.gu = J.gu();
  s.gv = J.gv();
  s.d1 = J.d1();
  s.d2 = J.d2();
  s.tr = s.fu + s.gv;
  s.det = s.fu * s.gv - s.fv * s.gu;
  s.b = s.d1 * s.gv + s.d2 * s.fu;
  s.Delta = s.b * s.b - 4 * s.d1 * s.d2 * s.det;
  s.p_star = s.tr / (s.d1 + s.d2);
  if (s.Delta > 0) {
    // roots of d1 d2 p^2 - b p + det without cancellation
    const double q = 0.5 * (s.b + std::copysign(std::sqrt(s.Delta), s.b));
    double r1 = q / (s.d1 * s.d2), r2 = (q != 0) ? s.det / q : 0.0;
    if (r1 > r2) std::swap(r1, r2);
    s.p_minus = r1;
    s.p_plus = r2;
  }
  return s;
}

std::vector<double> scalar_mode_eigenvalues(double f_u, double f_ubar, double r, double d, const Domain1D& dom,
                                            int i_max) {
  if (!(r > 0) || !(d > 0)) throw Error(ErrorKind::ParameterConstraintViolated, "requires r > 0 and d > 0");
  std::vector<double> mu(std::max(0, i_max) + 1);
  mu[0] = r * (f_u + f_ubar);
  for (int i = 1; i <= i_max; ++i) mu[i] = -d * eigenvalue(dom, i) + r * f_u;
  return mu;
}

double scalar_critical_diffusion(double f_u, double r, const Domain1D& dom) {
  if (!(f_u > 0))
    throw Error(ErrorKind::NotDestabilizable, "f_u <= 0: the constant state is stable for every d and r");
  return r * f_u / eigenvalue(dom, 1);
}

Eigen::Matrix2d block_at(const JacobianData& J, double lambda, bool i_zero) {
  if (i_zero) return J.JU + J.JUbar;
  return -lambda * J.D + J.JU;
}

std::pair<Eigen::Matrix2d, Eigen::Matrix2d> block_matrices(const JacobianData& J, double l, int i) {
  if (i < 0) throw Error(ErrorKind::Usage, "mode index must be non-negative");
  if (i == 0) return {J.sum(), J.sum()};
  const double lam = eigenvalue(l, i);
  Eigen::Matrix2d Ji = -lam * J.D + J.JU;
  return {Ji, Ji + J.JUbar};
}

std::string to_string(CaseLabel c) {
  switch (c) {
    case CaseLabel::i: return "i";
    case CaseLabel::ii_a: return "ii-a";
    case CaseLabel::ii_b: return "ii-b";
    case CaseLabel::ii_c: return "ii-c";
    case CaseLabel::ii_d: return "ii-d";
    case CaseLabel::iii_a: return "iii-a";
    case CaseLabel::iii_b: return "iii-b";
    case CaseLabel::iv_a: return "iv-a";
    case CaseLabel::iv_b: return "iv-b";
    case CaseLabel::none: return "none";
  }
  return "none";
}

bool InstabilityReport::in_S(double p) const {
  return std::any_of(I_S.begin(), I_S.end(), [&](const Interval& I) { return I.contains(p); });
}
bool InstabilityReport::in_H(double p) const {
  return std::any_of(I_H.begin(), I_H.end(), [&](const Interval& I) { return I.contains(p); });
}

bool is_stable(const Eigen::Matrix2d& A) { return A.trace() < 0 && A.determinant() > 0; }

InstabilityReport classify(const JacobianData& J) {
  if (J.species != 2) throw Error(ErrorKind::Usage, "classification needs a two-species model");
  if (!is_stable(J.sum()))
    throw Error(ErrorKind::BaseStateUnstable, "J_U + J_Ubar is not stable (trace " + std::to_string(J.sum().trace()) +
                                                  ", determinant " + std::to_string(J.sum().determinant()) + ")");
  InstabilityReport rep;
  rep.disp = dispersion(J);
  const auto& s = rep.disp;
  if (std::abs(s.tr) < 1e-12 || std::abs(s.det) < 1e-12)
    throw Error(ErrorKind::DegenerateCase, "Tr(J_U) or Det(J_U) vanishes");

  const bool two_pos_roots = s.Delta > 0 && s.b > 0;
  if (s.det < 0 && s.tr < 0) {
    rep.label = CaseLabel::i;
    rep.I_S = {{0.0, *s.p_plus}};
  } else if (s.det > 0 && s.tr > 0) {
    if (!two_pos_roots) {
      rep.label = CaseLabel::ii_a;
      rep.I_H = {{0.0, s.p_star}};
    } else {
      const double pm = *s.p_minus, pp = *s.p_plus;
      rep.I_S = {{pm, pp}};
      if (s.p_star > pp) {
        rep.label = CaseLabel::ii_b;
        rep.I_H = {{0.0, pm}, {pp, s.p_star}};
      } else if (s.p_star > pm) {
        rep.label = CaseLabel::ii_c;
        rep.I_H = {{0.0, pm}};
      } else {
        rep.label = CaseLabel::ii_d;
        rep.I_H = {{0.0, s.p_star}};
      }
    }
  } else if (s.det < 0 && s.tr > 0) {
    const double pp = *s.p_plus;
    rep.I_S = {{0.0, pp}};
    if (s.p_star <= pp) {
      rep.label = CaseLabel::iii_a;
    } else {
      rep.label = CaseLabel::iii_b;
      rep.I_H = {{pp, s.p_star}};
    }
  } else {
    if (!two_pos_roots) {
      rep.label = CaseLabel::iv_a;
    } else {
      rep.label = CaseLabel::iv_b;
      rep.I_S = {{*s.p_minus, *s.p_plus}};
    }
  }
  return rep;
}

void fill_admissible_modes(InstabilityReport& rep, double l) {
  rep.steady_modes.clear();
  rep.hopf_modes.clear();
  double top = 0;
  for (const auto& I : rep.I_S) top = std::max(top, I.hi);
  for (const auto& I : rep.I_H) top = std::max(top, I.hi);
  for (int i = 1; eigenvalue(l, i) < top; ++i) {
    const double p = eigenvalue(l, i);
    if (rep.in_S(p)) rep.steady_modes.push_back(i);
    if (rep.in_H(p)) rep.hopf_modes.push_back(i);
  }
}

InstabilityReport classify(const JacobianData& J, double l) {
  InstabilityReport rep = classify(J);
  fill_admissible_modes(rep, l);
  return rep;
}

bool verify_intervals(const JacobianData& J, const InstabilityReport& rep, int grid_size) {
  if (grid_size < 1000) throw Error(ErrorKind::Usage, "verify_intervals needs at least 1000 grid points");
  std::vector<double> ends;
  for (const auto& I : rep.I_S) ends.insert(ends.end(), {I.lo, I.hi});
  for (const auto& I : rep.I_H) ends.insert(ends.end(), {I.lo, I.hi});
  double top = 1.0;
  if (rep.disp.p_plus) top = std::max(top, *rep.disp.p_plus);
  top = std::max(top, rep.disp.p_star);
  const double hi = 10 * top, lo = hi * 1e-6;

  Eigen::EigenSolver<Eigen::Matrix2d> es;
  for (int k = 0; k < grid_size; ++k) {
    const double p = lo * std::pow(hi / lo, double(k) / (grid_size - 1));
    bool near_edge = false;
    for (double e : ends) near_edge |= std::abs(p - e) <= 1e-8 * std::max(1.0, std::abs(e));
    if (near_edge) continue;

    es.compute(J.JU - p * J.D, false);
    const std::complex<double> m1 = es.eigenvalues()[0], m2 = es.eigenvalues()[1];
    const bool real = m1.imag() == 0.0 && m2.imag() == 0.0;
    const bool saddle = real && ((m1.real() > 0 && m2.real() < 0) || (m1.real() < 0 && m2.real() > 0));
    const bool both_unstable = m1.real() > 0 && m2.real() > 0;

    if (saddle != rep.in_S(p) || both_unstable != rep.in_H(p)) {
      std::ostringstream os;
      os.precision(12);
      os << "p=" << p << " eigenvalues " << m1 << ", " << m2 << " but report says I_S=" << rep.in_S(p)
         << " I_H=" << rep.in_H(p);
      throw Error(ErrorKind::MismatchAt, os.str());
    }
  }
  return true;
}

}  // namespace nrd
