#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "nrd/errors.hpp"

namespace nrd {

using Vec2 = std::array<double, 2>;
using ParamMap = std::map<std::string, double>;

struct Equilibrium {
  int species = 1;
  Vec2 values{0.0, 0.0};
};

// Linearization at a constant state. For one species only the (0,0) entries are used.
struct JacobianData {
  int species = 2;
  Eigen::Matrix2d JU = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d JUbar = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d D = Eigen::Matrix2d::Identity();

  double fu() const { return JU(0, 0); }
  double fv() const { return JU(0, 1); }
  double gu() const { return JU(1, 0); }
  double gv() const { return JU(1, 1); }
  double d1() const { return D(0, 0); }
  double d2() const { return D(1, 1); }
  Eigen::Matrix2d sum() const { return JU + JUbar; }
};

// Partials of the raw scalar kinetics f(u, ubar) at the equilibrium (no factor r).
struct ScalarDerivatives {
  double f_u = 0, f_ubar = 0, f_uu = 0, f_uubar = 0, f_uuu = 0;
};

class Model {
 public:
  explicit Model(double r = 1.0) : r_(r) {}
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual int species() const = 0;
  virtual ParamMap parameters() const = 0;
  double r() const { return r_; }

  // Raw kinetics (f, g) at local densities and spatial averages; the PDE uses r * kinetics.
  virtual Vec2 kinetics(const Vec2& local, const Vec2& avg) const = 0;
  Vec2 rates(const Vec2& local, const Vec2& avg) const {
    Vec2 k = kinetics(local, avg);
    return {r_ * k[0], r_ * k[1]};
  }
  // Vectorized r * kinetics over a field; v and fv are ignored for one species.
  virtual void rates_field(const double* u, const double* v, double ubar, double vbar, double* fu,
                           double* fv, std::size_t n) const;

  virtual Equilibrium equilibrium() const = 0;
  // J_U and J_Ubar include the factor r.
  virtual JacobianData jacobians(double d1, double d2 = 1.0) const;
  virtual ScalarDerivatives scalar_derivatives() const;
  virtual bool population() const { return true; }

 protected:
  double r_;
};

using ModelPtr = std::shared_ptr<const Model>;

// Central-difference partials with relative step 1e-6.
JacobianData fd_jacobians(const Model& m, const Equilibrium& eq, double d1, double d2);
ScalarDerivatives fd_scalar_derivatives(const Model& m, double ustar);

namespace detail {
template <class Derived>
class Builtin : public Model {
 public:
  using Model::Model;
  Vec2 kinetics(const Vec2& local, const Vec2& avg) const override {
    return static_cast<const Derived&>(*this).eval(local, avg);
  }
  void rates_field(const double* u, const double* v, double ubar, double vbar, double* fu, double* fv,
                   std::size_t n) const override {
    const auto& self = static_cast<const Derived&>(*this);
    const bool two = self.species() == 2;
    for (std::size_t j = 0; j < n; ++j) {
      Vec2 k = self.eval({u[j], two ? v[j] : 0.0}, {ubar, vbar});
      fu[j] = r_ * k[0];
      if (two) fv[j] = r_ * k[1];
    }
  }
};
}  // namespace detail

// u_t = d u_xx + r u (1 + a u - b ubar)
class NonlocalLogistic final : public detail::Builtin<NonlocalLogistic> {
 public:
  NonlocalLogistic(double a, double b, double r = 1.0);
  std::string name() const override { return "logistic"; }
  int species() const override { return 1; }
  ParamMap parameters() const override { return {{"a", a_}, {"b", b_}, {"r", r_}}; }
  Vec2 eval(const Vec2& l, const Vec2& m) const { return {l[0] * (1 + a_ * l[0] - b_ * m[0]), 0.0}; }
  Equilibrium equilibrium() const override;
  JacobianData jacobians(double d1, double d2 = 1.0) const override;
  ScalarDerivatives scalar_derivatives() const override;

 private:
  double a_, b_;
};

// f = k_on (1 - ubar) + k_fb (1 - ubar) u - k_off u
class MembraneFeedback final : public detail::Builtin<MembraneFeedback> {
 public:
  MembraneFeedback(double k_on, double k_fb, double k_off, double r = 1.0);
  std::string name() const override { return "membrane"; }
  int species() const override { return 1; }
  ParamMap parameters() const override {
    return {{"k_on", kon_}, {"k_fb", kfb_}, {"k_off", koff_}, {"r", r_}};
  }
  Vec2 eval(const Vec2& l, const Vec2& m) const {
    return {kon_ * (1 - m[0]) + kfb_ * (1 - m[0]) * l[0] - koff_ * l[0], 0.0};
  }
  Equilibrium equilibrium() const override;
  JacobianData jacobians(double d1, double d2 = 1.0) const override;
  ScalarDerivatives scalar_derivatives() const override;
  // Coefficients (a, b, c, d, e) of the same kinetics written as a general averaged logistic.
  std::array<double, 5> general_form() const { return {kon_, kon_, koff_ - kfb_, 0.0, kfb_}; }

 private:
  double kon_, kfb_, koff_;
};

// f = a - b ubar - c u - d ubar^2 - e u ubar
class GeneralAveragedLogistic final : public detail::Builtin<GeneralAveragedLogistic> {
 public:
  GeneralAveragedLogistic(double a, double b, double c, double d, double e, double r = 1.0);
  std::string name() const override { return "general"; }
  int species() const override { return 1; }
  ParamMap parameters() const override {
    return {{"a", a_}, {"b", b_}, {"c", c_}, {"d", d_}, {"e", e_}, {"r", r_}};
  }
  Vec2 eval(const Vec2& l, const Vec2& m) const {
    return {a_ - b_ * m[0] - c_ * l[0] - d_ * m[0] * m[0] - e_ * l[0] * m[0], 0.0};
  }
  Equilibrium equilibrium() const override;
  JacobianData jacobians(double d1, double d2 = 1.0) const override;
  ScalarDerivatives scalar_derivatives() const override;
  // Right side of the closed equation for the spatial mean: a - (b+c) m - (d+e) m^2.
  double mean_rhs(double m) const { return r_ * (a_ - (b_ + c_) * m - (d_ + e_) * m * m); }

 private:
  double a_, b_, c_, d_, e_;
};

// f = u (1 - a ubar + b v), g = v (1 + c u - d v)
class CoopLV final : public detail::Builtin<CoopLV> {
 public:
  CoopLV(double a, double b, double c, double d, double r = 1.0);
  std::string name() const override { return "coop"; }
  int species() const override { return 2; }
  ParamMap parameters() const override { return {{"a", a_}, {"b", b_}, {"c", c_}, {"d", d_}, {"r", r_}}; }
  Vec2 eval(const Vec2& l, const Vec2& m) const {
    return {l[0] * (1 - a_ * m[0] + b_ * l[1]), l[1] * (1 + c_ * l[0] - d_ * l[1])};
  }
  Equilibrium equilibrium() const override;
  JacobianData jacobians(double d1, double d2 = 1.0) const override;
  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }
  double d() const { return d_; }

 private:
  double a_, b_, c_, d_;
};

// f = u (1 - a ubar + b v), g = v (1 + c u + d v - e vbar)
class CoopLV2 final : public detail::Builtin<CoopLV2> {
 public:
  CoopLV2(double a, double b, double c, double d, double e, double r = 1.0);
  std::string name() const override { return "coop2"; }
  int species() const override { return 2; }
  ParamMap parameters() const override {
    return {{"a", a_}, {"b", b_}, {"c", c_}, {"d", d_}, {"e", e_}, {"r", r_}};
  }
  Vec2 eval(const Vec2& l, const Vec2& m) const {
    return {l[0] * (1 - a_ * m[0] + b_ * l[1]), l[1] * (1 + c_ * l[0] + d_ * l[1] - e_ * m[1])};
  }
  Equilibrium equilibrium() const override;
  JacobianData jacobians(double d1, double d2 = 1.0) const override;

 private:
  double a_, b_, c_, d_, e_;
};

// f = u (1 - ubar/k) - m u v/(u+1), g = -theta v + m u v/(u+1)
class RMNonlocal final : public detail::Builtin<RMNonlocal> {
 public:
  RMNonlocal(double k, double m, double theta, double r = 1.0);
  std::string name() const override { return "rm"; }
  int species() const override { return 2; }
  ParamMap parameters() const override { return {{"k", k_}, {"m", m_}, {"theta", theta_}, {"r", r_}}; }
  Vec2 eval(const Vec2& l, const Vec2& a) const {
    const double q = m_ * l[0] * l[1] / (l[0] + 1);
    return {l[0] * (1 - a[0] / k_) - q, -theta_ * l[1] + q};
  }
  Equilibrium equilibrium() const override;
  JacobianData jacobians(double d1, double d2 = 1.0) const override;
  double lambda() const { return theta_ / (m_ - theta_); }
  double k() const { return k_; }
  double theta() const { return theta_; }

  static double m_for_lambda(double lambda, double theta) { return theta * (1 + lambda) / lambda; }

 private:
  double k_, m_, theta_;
};

// Every averaged argument replaced by the local value.
class Localized final : public Model {
 public:
  explicit Localized(ModelPtr inner);
  std::string name() const override { return inner_->name() + "-localized"; }
  int species() const override { return inner_->species(); }
  ParamMap parameters() const override { return inner_->parameters(); }
  Vec2 kinetics(const Vec2& local, const Vec2&) const override { return inner_->kinetics(local, local); }
  void rates_field(const double* u, const double* v, double ubar, double vbar, double* fu, double* fv,
                   std::size_t n) const override;
  Equilibrium equilibrium() const override { return inner_->equilibrium(); }
  JacobianData jacobians(double d1, double d2 = 1.0) const override;
  ScalarDerivatives scalar_derivatives() const override;
  bool population() const override { return inner_->population(); }

 private:
  ModelPtr inner_;
};

// Kinetics supplied as callables. Without an analytic Jacobian, central differences are used;
// the equilibrium is found by damped Newton from the seed.
class UserModel final : public Model {
 public:
  using Kinetics = std::function<Vec2(const Vec2& local, const Vec2& avg)>;
  using Jacobian = std::function<std::pair<Eigen::Matrix2d, Eigen::Matrix2d>(const Vec2& eq)>;

  UserModel(std::string name, int species, Kinetics f, Vec2 seed, double r = 1.0,
            std::optional<Jacobian> jac = std::nullopt, bool population = false);
  std::string name() const override { return name_; }
  int species() const override { return species_; }
  ParamMap parameters() const override { return {{"r", r_}}; }
  Vec2 kinetics(const Vec2& local, const Vec2& avg) const override { return f_(local, avg); }
  Equilibrium equilibrium() const override { return eq_; }
  JacobianData jacobians(double d1, double d2 = 1.0) const override;
  bool population() const override { return population_; }

 private:
  std::string name_;
  int species_;
  Kinetics f_;
  std::optional<Jacobian> jac_;
  bool population_;
  Equilibrium eq_;
};

// Damped Newton on the constant-state equations f(w, w) = 0.
Equilibrium newton_equilibrium(const Model& m, Vec2 seed, double tol = 1e-12, int max_iter = 100);

// Builtin by name: logistic, membrane, general, coop, coop2, rm. Missing "r" defaults to 1.
ModelPtr make_builtin(const std::string& name, const ParamMap& params, bool localized = false);

}  // namespace nrd
