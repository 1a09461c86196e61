#include "nrd/model.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace nrd {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::ParameterConstraintViolated, msg);
}

double step_for(double x, double rel) { return rel * std::max(1.0, std::abs(x)); }

JacobianData scalar_jac(double r, double fu, double fubar, double d1) {
  JacobianData J;
  J.species = 1;
  J.JU(0, 0) = r * fu;
  J.JUbar(0, 0) = r * fubar;
  J.D(0, 0) = d1;
  return J;
}

JacobianData pair_jac(double r, const Eigen::Matrix2d& JU, const Eigen::Matrix2d& JUbar, double d1, double d2) {
  require(d1 > 0 && d2 > 0, "diffusion coefficients must be positive");
  JacobianData J;
  J.species = 2;
  J.JU = r * JU;
  J.JUbar = r * JUbar;
  J.D = Eigen::Vector2d(d1, d2).asDiagonal();
  return J;
}

}  // namespace

void Model::rates_field(const double* u, const double* v, double ubar, double vbar, double* fu, double* fv,
                        std::size_t n) const {
  const bool two = species() == 2;
  for (std::size_t j = 0; j < n; ++j) {
    Vec2 k = rates({u[j], two ? v[j] : 0.0}, {ubar, vbar});
    fu[j] = k[0];
    if (two) fv[j] = k[1];
  }
}

JacobianData Model::jacobians(double d1, double d2) const { return fd_jacobians(*this, equilibrium(), d1, d2); }

ScalarDerivatives Model::scalar_derivatives() const {
  if (species() != 1) throw Error(ErrorKind::Usage, "scalar derivatives requested for a two-species model");
  return fd_scalar_derivatives(*this, equilibrium().values[0]);
}

JacobianData fd_jacobians(const Model& m, const Equilibrium& eq, double d1, double d2) {
  const int n = m.species();
  JacobianData J;
  J.species = n;
  J.D = Eigen::Vector2d(d1, n == 2 ? d2 : 1.0).asDiagonal();
  for (int k = 0; k < n; ++k) {
    const double h = step_for(eq.values[k], 1e-6);
    for (int avg = 0; avg < 2; ++avg) {
      Vec2 lp = eq.values, lm = eq.values, ap = eq.values, am = eq.values;
      if (avg) {
        ap[k] += h;
        am[k] -= h;
      } else {
        lp[k] += h;
        lm[k] -= h;
      }
      Vec2 fp = m.rates(avg ? eq.values : lp, avg ? ap : eq.values);
      Vec2 fm = m.rates(avg ? eq.values : lm, avg ? am : eq.values);
      for (int i = 0; i < n; ++i) (avg ? J.JUbar : J.JU)(i, k) = (fp[i] - fm[i]) / (2 * h);
    }
  }
  return J;
}

ScalarDerivatives fd_scalar_derivatives(const Model& m, double u) {
  auto f = [&](double a, double b) { return m.kinetics({a, 0.0}, {b, 0.0})[0]; };
  ScalarDerivatives s;
  const double h1 = step_for(u, 1e-6), h2 = step_for(u, 1e-4), h3 = step_for(u, 2e-3);
  s.f_u = (f(u + h1, u) - f(u - h1, u)) / (2 * h1);
  s.f_ubar = (f(u, u + h1) - f(u, u - h1)) / (2 * h1);
  s.f_uu = (f(u + h2, u) - 2 * f(u, u) + f(u - h2, u)) / (h2 * h2);
  s.f_uubar = (f(u + h2, u + h2) - f(u + h2, u - h2) - f(u - h2, u + h2) + f(u - h2, u - h2)) / (4 * h2 * h2);
  s.f_uuu = (f(u + 2 * h3, u) - 2 * f(u + h3, u) + 2 * f(u - h3, u) - f(u - 2 * h3, u)) / (2 * h3 * h3 * h3);
  return s;
}

// ---- NonlocalLogistic

NonlocalLogistic::NonlocalLogistic(double a, double b, double r) : Builtin(r), a_(a), b_(b) {
  require(r > 0, "logistic: r must be positive");
  require(b > a, "logistic: requires b > a for a positive equilibrium");
}

Equilibrium NonlocalLogistic::equilibrium() const { return {1, {1.0 / (b_ - a_), 0.0}}; }

ScalarDerivatives NonlocalLogistic::scalar_derivatives() const {
  const double u = 1.0 / (b_ - a_);
  return {a_ / (b_ - a_), -b_ * u, 2 * a_, -b_, 0.0};
}

JacobianData NonlocalLogistic::jacobians(double d1, double) const {
  require(d1 > 0, "diffusion coefficient must be positive");
  auto s = scalar_derivatives();
  return scalar_jac(r_, s.f_u, s.f_ubar, d1);
}

// ---- MembraneFeedback

MembraneFeedback::MembraneFeedback(double k_on, double k_fb, double k_off, double r)
    : Builtin(r), kon_(k_on), kfb_(k_fb), koff_(k_off) {
  require(r > 0, "membrane: r must be positive");
  require(k_on > 0 && k_fb >= 0 && k_off >= 0, "membrane: requires k_on > 0 and k_fb, k_off >= 0");
}

Equilibrium MembraneFeedback::equilibrium() const {
  // k_fb u^2 + (k_on + k_off - k_fb) u - k_on = 0, positive root in cancellation-free form
  const double B = kon_ + koff_ - kfb_;
  const double u = 2 * kon_ / (B + std::sqrt(B * B + 4 * kfb_ * kon_));
  return {1, {u, 0.0}};
}

ScalarDerivatives MembraneFeedback::scalar_derivatives() const {
  const double u = equilibrium().values[0];
  return {kfb_ * (1 - u) - koff_, -kon_ - kfb_ * u, 0.0, -kfb_, 0.0};
}

JacobianData MembraneFeedback::jacobians(double d1, double) const {
  require(d1 > 0, "diffusion coefficient must be positive");
  auto s = scalar_derivatives();
  return scalar_jac(r_, s.f_u, s.f_ubar, d1);
}

// ---- GeneralAveragedLogistic

GeneralAveragedLogistic::GeneralAveragedLogistic(double a, double b, double c, double d, double e, double r)
    : Builtin(r), a_(a), b_(b), c_(c), d_(d), e_(e) {
  require(r > 0, "general: r must be positive");
  require(a > 0 && d + e > 0, "general: requires a > 0 and d + e > 0");
}

Equilibrium GeneralAveragedLogistic::equilibrium() const {
  const double B = b_ + c_, A = d_ + e_;
  return {1, {2 * a_ / (B + std::sqrt(B * B + 4 * A * a_)), 0.0}};
}

ScalarDerivatives GeneralAveragedLogistic::scalar_derivatives() const {
  const double u = equilibrium().values[0];
  return {-c_ - e_ * u, -b_ - 2 * d_ * u - e_ * u, 0.0, -e_, 0.0};
}

JacobianData GeneralAveragedLogistic::jacobians(double d1, double) const {
  require(d1 > 0, "diffusion coefficient must be positive");
  auto s = scalar_derivatives();
  return scalar_jac(r_, s.f_u, s.f_ubar, d1);
}

// ---- CoopLV

CoopLV::CoopLV(double a, double b, double c, double d, double r) : Builtin(r), a_(a), b_(b), c_(c), d_(d) {
  require(r > 0, "coop: r must be positive");
  require(a * d - b * c > 0, "coop: requires ad - bc > 0");
  require(d + b > 0 && a + c > 0, "coop: equilibrium must be positive");
}

Equilibrium CoopLV::equilibrium() const {
  const double D = a_ * d_ - b_ * c_;
  return {2, {(d_ + b_) / D, (a_ + c_) / D}};
}

JacobianData CoopLV::jacobians(double d1, double d2) const {
  auto [u, v] = equilibrium().values;
  Eigen::Matrix2d JU, JB;
  JU << 0, b_ * u, c_ * v, -d_ * v;
  JB << -a_ * u, 0, 0, 0;
  return pair_jac(r_, JU, JB, d1, d2);
}

// ---- CoopLV2

CoopLV2::CoopLV2(double a, double b, double c, double d, double e, double r)
    : Builtin(r), a_(a), b_(b), c_(c), d_(d), e_(e) {
  require(r > 0, "coop2: r must be positive");
  require(e > d, "coop2: requires e > d");
  require(a * (e - d) - b * c > 0, "coop2: requires a(e-d) - bc > 0");
  require(e - d + b > 0 && a + c > 0, "coop2: equilibrium must be positive");
}

Equilibrium CoopLV2::equilibrium() const {
  const double D = a_ * (e_ - d_) - b_ * c_;
  return {2, {(e_ - d_ + b_) / D, (a_ + c_) / D}};
}

JacobianData CoopLV2::jacobians(double d1, double d2) const {
  auto [u, v] = equilibrium().values;
  Eigen::Matrix2d JU, JB;
  JU << 0, b_ * u, c_ * v, d_ * v;
  JB << -a_ * u, 0, 0, -e_ * v;
  return pair_jac(r_, JU, JB, d1, d2);
}

// ---- RMNonlocal

RMNonlocal::RMNonlocal(double k, double m, double theta, double r) : Builtin(r), k_(k), m_(m), theta_(theta) {
  require(r > 0, "rm: r must be positive");
  require(k > 0 && theta > 0, "rm: requires k > 0 and theta > 0");
  require(m > theta, "rm: requires m > theta");
  const double lam = theta / (m - theta);
  require(lam < k, "rm: requires lambda = theta/(m-theta) < k");
}

Equilibrium RMNonlocal::equilibrium() const {
  const double lam = lambda();
  return {2, {lam, (k_ - lam) * (1 + lam) / (k_ * m_)}};
}

JacobianData RMNonlocal::jacobians(double d1, double d2) const {
  const double lam = lambda();
  const double A = (k_ - lam) / (k_ * (1 + lam));
  Eigen::Matrix2d JU, JB;
  JU << lam * A, -theta_, A, 0;
  JB << -lam / k_, 0, 0, 0;
  return pair_jac(r_, JU, JB, d1, d2);
}

// ---- Localized

Localized::Localized(ModelPtr inner) : Model(inner->r()), inner_(std::move(inner)) {}

void Localized::rates_field(const double* u, const double* v, double, double, double* fu, double* fv,
                            std::size_t n) const {
  const bool two = species() == 2;
  for (std::size_t j = 0; j < n; ++j) {
    Vec2 l{u[j], two ? v[j] : 0.0};
    Vec2 k = rates(l, l);
    fu[j] = k[0];
    if (two) fv[j] = k[1];
  }
}

JacobianData Localized::jacobians(double d1, double d2) const {
  JacobianData J = inner_->jacobians(d1, d2);
  J.JU += J.JUbar;
  J.JUbar.setZero();
  return J;
}

ScalarDerivatives Localized::scalar_derivatives() const {
  return fd_scalar_derivatives(*this, equilibrium().values[0]);
}

// ---- UserModel

UserModel::UserModel(std::string name, int species, Kinetics f, Vec2 seed, double r, std::optional<Jacobian> jac,
                     bool population)
    : Model(r), name_(std::move(name)), species_(species), f_(std::move(f)), jac_(std::move(jac)),
      population_(population) {
  require(species == 1 || species == 2, "user model: species must be 1 or 2");
  eq_ = newton_equilibrium(*this, seed);
}

JacobianData UserModel::jacobians(double d1, double d2) const {
  if (!jac_) return fd_jacobians(*this, eq_, d1, d2);
  auto [JU, JB] = (*jac_)(eq_.values);
  JacobianData J;
  J.species = species_;
  J.JU = r_ * JU;
  J.JUbar = r_ * JB;
  J.D = Eigen::Vector2d(d1, species_ == 2 ? d2 : 1.0).asDiagonal();
  return J;
}

Equilibrium newton_equilibrium(const Model& m, Vec2 w, double tol, int max_iter) {
  const int n = m.species();
  auto F = [&](const Vec2& x) {
    Vec2 k = m.kinetics(x, x);
    return Eigen::Vector2d(k[0], n == 2 ? k[1] : 0.0);
  };
  auto norm = [](const Eigen::Vector2d& r) { return r.cwiseAbs().maxCoeff(); };
  Eigen::Vector2d Fw = F(w);
  for (int it = 0; it < max_iter && norm(Fw) >= tol; ++it) {
    Eigen::Matrix2d J = Eigen::Matrix2d::Identity();
    for (int k = 0; k < n; ++k) {
      const double h = step_for(w[k], 1e-7);
      Vec2 p = w, q = w;
      p[k] += h;
      q[k] -= h;
      J.col(k) = (F(p) - F(q)) / (2 * h);
    }
    Eigen::Vector2d dx = Eigen::Vector2d::Zero();
    dx.head(n) = -J.topLeftCorner(n, n).fullPivLu().solve(Fw.head(n));
    double t = 1.0;
    for (int half = 0; half < 40; ++half, t *= 0.5) {
      Vec2 trial{w[0] + t * dx[0], w[1] + t * dx[1]};
      Eigen::Vector2d Ft = F(trial);
      if (std::isfinite(Ft[0]) && std::isfinite(Ft[1]) && norm(Ft) < norm(Fw)) {
        w = trial;
        Fw = Ft;
        break;
      }
    }
    if (t * dx.cwiseAbs().maxCoeff() < 1e-16) break;
  }
  if (!(norm(Fw) < std::max(tol, 1e-10)))
    throw Error(ErrorKind::ParameterConstraintViolated, "no equilibrium found from the given seed");
  return {n, {w[0], n == 2 ? w[1] : 0.0}};
}

ModelPtr make_builtin(const std::string& name, const ParamMap& params, bool localized) {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"logistic", {"a", "b"}},
      {"membrane", {"k_on", "k_fb", "k_off"}},
      {"general", {"a", "b", "c", "d", "e"}},
      {"coop", {"a", "b", "c", "d"}},
      {"coop2", {"a", "b", "c", "d", "e"}},
      {"rm", {"k", "m", "theta"}},
  };
  auto it = keys.find(name);
  if (it == keys.end()) throw Error(ErrorKind::Usage, "unknown model '" + name + "'");
  std::set<std::string> allowed(it->second.begin(), it->second.end());
  allowed.insert("r");
  if (name == "rm") allowed.insert("lambda");
  for (const auto& [k, v] : params)
    if (!allowed.count(k)) throw Error(ErrorKind::Usage, "model '" + name + "' has no parameter '" + k + "'");

  ParamMap p = params;
  if (name == "rm" && p.count("lambda")) {
    if (p.count("m")) throw Error(ErrorKind::Usage, "rm: give either m or lambda, not both");
    if (!p.count("theta")) throw Error(ErrorKind::Usage, "rm: missing parameter 'theta'");
    require(p["lambda"] > 0, "rm: lambda must be positive");
    p["m"] = RMNonlocal::m_for_lambda(p["lambda"], p["theta"]);
  }
  for (const auto& k : it->second)
    if (!p.count(k)) throw Error(ErrorKind::Usage, "model '" + name + "' is missing parameter '" + k + "'");
  const double r = p.count("r") ? p["r"] : 1.0;

  ModelPtr m;
  if (name == "logistic") m = std::make_shared<NonlocalLogistic>(p["a"], p["b"], r);
  else if (name == "membrane") m = std::make_shared<MembraneFeedback>(p["k_on"], p["k_fb"], p["k_off"], r);
  else if (name == "general") m = std::make_shared<GeneralAveragedLogistic>(p["a"], p["b"], p["c"], p["d"], p["e"], r);
  else if (name == "coop") m = std::make_shared<CoopLV>(p["a"], p["b"], p["c"], p["d"], r);
  else if (name == "coop2") m = std::make_shared<CoopLV2>(p["a"], p["b"], p["c"], p["d"], p["e"], r);
  else m = std::make_shared<RMNonlocal>(p["k"], p["m"], p["theta"], r);
  if (localized) m = std::make_shared<Localized>(m);
  return m;
}

}  // namespace nrd
