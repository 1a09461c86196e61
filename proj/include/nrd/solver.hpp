#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nrd/model.hpp"
#include "nrd/spectral.hpp"

namespace nrd {

enum class StepperKind { IMEX, RK4 };
std::string to_string(StepperKind s);

// c0 + c1 cos(q x)
struct CosineProfile {
  double c0 = 0, c1 = 0, q = 1;
};

struct InitialCondition {
  std::array<std::optional<CosineProfile>, 2> closed;
  std::array<std::vector<double>, 2> sampled;

  static InitialCondition cosine(CosineProfile u, std::optional<CosineProfile> v = std::nullopt);
  static InitialCondition profile(std::vector<double> u, std::vector<double> v = {});
  // Equilibrium plus eps cos(x/l) in every species.
  static InitialCondition perturbed_equilibrium(const Model& m, double l, double eps, int mode = 1);

  std::array<std::vector<double>, 2> sample(const Domain1D& dom, int species) const;
};

struct SimConfig {
  Domain1D domain{1.0, 256};
  double d1 = 1.0, d2 = 1.0;
  double dt = 1e-3;
  double t_end = 1.0;
  StepperKind stepper = StepperKind::IMEX;
  int snapshot_every = 100;
  double steady_tol = 1e-9;
  int steady_snapshots = 50;
  bool early_exit = true;
  double mode_threshold = 0.02;
  InitialCondition ic;

  void validate(int species) const;
};

struct State {
  double t = 0;
  std::vector<double> u, v;
};

// Advances states of one model under one configuration; the diffusion factorization is cached.
class Integrator {
 public:
  Integrator(const Model& m, const SimConfig& cfg);
  void step(State& s);
  // Max-norm of the semi-discrete right side.
  double residual(const State& s) const;
  // d u_xx + r f for every species, on the three-point Neumann stencil.
  void rhs(const std::vector<double>& u, const std::vector<double>& v, std::vector<double>& du,
           std::vector<double>& dv) const;
  std::size_t negative_steps() const { return negative_steps_; }

 private:
  void step_imex(State& s);
  void step_rk4(State& s);
  void solve(int species, std::vector<double>& x);
  void guard(const State& s);

  const Model& m_;
  SimConfig cfg_;
  int n_;
  std::array<double, 2> alpha_{};
  std::array<std::vector<double>, 2> cprime_, inv_;
  std::vector<double> fu_, fv_, tmp_, rev_;
  std::array<std::vector<double>, 8> rk_;
  std::size_t negative_steps_ = 0;
};

State step(const State& s, const Model& m, const SimConfig& cfg);

struct Trajectory {
  int species = 1;
  Domain1D domain;
  std::vector<double> times;
  std::vector<std::vector<double>> u, v;  // frames
  std::vector<double> avg_u, avg_v, l2, residual;

  std::size_t frames() const { return times.size(); }
  ModeSpectrum spectrum(std::size_t frame, int species_index = 0) const;
};

enum class OutcomeKind { ConstantSteady, PatternedSteady, PeriodicOrbit, Undecided };
std::string to_string(OutcomeKind k);

struct Outcome {
  OutcomeKind kind = OutcomeKind::Undecided;
  int mode = 0;
  double period = 0;
  double residual = 0;      // last snapshot residual
  double amplitude = 0;     // peak-to-peak of the L2 norm over the analysis window
  int periods_used = 0;
  double period_spread = 0;
  double t_final = 0;
  std::size_t negative_steps = 0;
  std::string describe() const;
};

struct RunResult {
  Trajectory trajectory;
  Outcome outcome;
};

RunResult run(const Model& m, const SimConfig& cfg);

// Oscillation analysis of the second half of a trajectory.
Outcome classify_trajectory(const Trajectory& tr, bool steady, double last_residual, double mode_threshold);

struct GrowthEstimate {
  double rate = 0;
  double frequency = 0;  // angular; zero for a real eigenvalue
  int window = 0;
};
// Seeds equilibrium + eps cos(i x/l) along the leading eigenvector of J_i and fits the linear phase.
GrowthEstimate growth_rate_probe(const Model& m, const SimConfig& cfg, int i, double eps_rel = 1e-4);

// RK4 series of the closed equation for the spatial mean; pairs (t, mean).
std::vector<std::pair<double, double>> averaged_ode_reduce(const GeneralAveragedLogistic& m, double ic_mean,
                                                           double t_end, double dt);
GeneralAveragedLogistic as_general(const MembraneFeedback& m);

}  // namespace nrd
