#include "nrd/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "nrd/bifurcation.hpp"
#include "nrd/stability.hpp"

#ifndef NRD_VERSION
#define NRD_VERSION "0.0.0"
#endif

namespace nrd::cli {

namespace {

[[noreturn]] void usage(const std::string& msg) { throw Error(ErrorKind::Usage, msg); }

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double to_double(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    usage("cannot parse '" + s + "' as a number for " + what);
  }
  if (pos != s.size()) usage("cannot parse '" + s + "' as a number for " + what);
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) usage("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) usage("cannot write " + path);
  out << data;
}

json interval_list(const std::vector<Interval>& v) {
  json a = json::array();
  for (const auto& I : v) a.push_back({I.lo, I.hi});
  return a;
}

json matrix(const Eigen::Matrix2d& M) { return {{M(0, 0), M(0, 1)}, {M(1, 0), M(1, 1)}}; }

json point_json(const BifurcationPoint& p) {
  json j = {{"kind", to_string(p.kind)}, {"param", p.param_name}, {"value", p.value}, {"mode", p.mode}};
  if (p.side != Side::none) j["side"] = to_string(p.side);
  if (!p.warning.empty()) j["warning"] = p.warning;
  return j;
}

json direction_json(const DirectionCoefficients& d) {
  return {{"first", d.first}, {"second", d.second}, {"verdict", to_string(d.verdict)}};
}

json eq_json(const Equilibrium& e) {
  json v = json::array();
  for (int k = 0; k < e.species; ++k) v.push_back(e.values[k]);
  return v;
}

}  // namespace

// ---- small utilities

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr))
    throw Error(ErrorKind::InternalInconsistency, "sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

unsigned worker_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NRD_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) n = std::min<unsigned>(n, unsigned(cap));
  }
  return n;
}

// ---- model specification

ModelSpec parse_params(const std::string& model, const std::string& kv) {
  ModelSpec spec;
  spec.name = model;
  std::stringstream ss(kv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    const auto eq = tok.find('=');
    if (eq == std::string::npos) {
      if (tok.size() > 6 && tok.ends_with("-range")) {
        spec.ranges.push_back(tok);
        continue;
      }
      usage("malformed parameter '" + tok + "' (expected key=value)");
    }
    const std::string key = trim(tok.substr(0, eq));
    if (key.empty()) usage("malformed parameter '" + tok + "'");
    spec.params[key] = to_double(trim(tok.substr(eq + 1)), key);
  }
  return spec;
}

ModelSpec model_spec(const json& r) {
  if (!r.contains("model") || !r["model"].is_string()) usage("no model given (--model or config \"model\")");
  ModelSpec spec;
  spec.name = r["model"].get<std::string>();
  if (r.contains("params")) {
    for (const auto& [k, v] : r["params"].items()) {
      if (!v.is_number()) usage("parameter '" + k + "' must be a number");
      spec.params[k] = v.get<double>();
    }
  }
  if (r.contains("ranges"))
    for (const auto& t : r["ranges"]) spec.ranges.push_back(t.get<std::string>());
  spec.localized = r.value("localized", false);
  return spec;
}

ModelPtr build_model(const ModelSpec& spec) { return make_builtin(spec.name, spec.params, spec.localized); }

// ---- simulation config

namespace {

CosineProfile profile_from(const json& j) {
  return CosineProfile{j.value("c0", 0.0), j.value("c1", 0.0), j.value("q", 1.0)};
}

InitialCondition ic_from(const json& r, const Model& m, const Domain1D& dom) {
  const json ic = r.value("ic", json::object());
  if (ic.contains("u")) {
    std::optional<CosineProfile> v;
    if (ic.contains("v")) v = profile_from(ic["v"]);
    if (m.species() == 2 && !v) usage("initial condition for v missing");
    return InitialCondition::cosine(profile_from(ic["u"]), v);
  }
  if (ic.contains("random")) {
    const json& rj = ic["random"];
    const double lo = rj.value("lo", 0.0), hi = rj.value("hi", 1.0);
    if (!(hi > lo)) usage("random initial condition needs hi > lo");
    std::mt19937_64 gen(r.value("seed", std::uint64_t{0}));
    std::uniform_real_distribution<double> U(lo, hi);
    std::vector<double> u(dom.N), v;
    for (double& x : u) x = U(gen);
    if (m.species() == 2) {
      v.resize(dom.N);
      for (double& x : v) x = U(gen);
    }
    return InitialCondition::profile(std::move(u), std::move(v));
  }
  return InitialCondition::perturbed_equilibrium(m, dom.l, ic.value("perturb", 0.01), ic.value("mode", 1));
}

}  // namespace

SimConfig sim_config(const json& r, const Model& m) {
  SimConfig c;
  c.domain = Domain1D(r.value("l", 1.0), r.value("N", 256));
  c.d1 = r.value("d1", 1.0);
  c.d2 = r.value("d2", 1.0);
  c.dt = r.value("dt", 1e-3);
  c.t_end = r.value("t_end", 100.0);
  const std::string st = r.value("stepper", std::string("imex"));
  if (st == "imex") c.stepper = StepperKind::IMEX;
  else if (st == "rk4") c.stepper = StepperKind::RK4;
  else usage("unknown stepper '" + st + "'");
  c.snapshot_every = r.value("snapshot_every", 100);
  c.steady_tol = r.value("steady_tol", 1e-9);
  c.steady_snapshots = r.value("steady_snapshots", 50);
  c.early_exit = r.value("early_exit", true);
  c.mode_threshold = r.value("mode_threshold", 0.02);
  c.ic = ic_from(r, m, c.domain);
  return c;
}

json outcome_json(const Outcome& o) {
  json j = {{"kind", to_string(o.kind)},       {"describe", o.describe()},     {"residual", o.residual},
            {"amplitude", o.amplitude},        {"t_final", o.t_final},         {"negative_steps", o.negative_steps},
            {"periods_used", o.periods_used}, {"period_spread", o.period_spread}};
  if (o.kind == OutcomeKind::PatternedSteady || o.kind == OutcomeKind::PeriodicOrbit) j["mode"] = o.mode;
  if (o.kind == OutcomeKind::PeriodicOrbit) j["period"] = o.period;
  return j;
}

// ---- marching squares

std::vector<Polyline> zero_contours(const std::vector<double>& xs, const std::vector<double>& ys,
                                    const std::vector<double>& z) {
  const std::size_t nx = xs.size(), ny = ys.size();
  if (z.size() != nx * ny) throw Error(ErrorKind::LengthMismatch, "contour grid size mismatch");
  auto Z = [&](std::size_t i, std::size_t j) { return z[i * ny + j]; };

  // Edge ids: horizontal edge (i,j)-(i+1,j) -> 2*(i*ny+j), vertical edge (i,j)-(i,j+1) -> 2*(i*ny+j)+1.
  std::map<long, std::array<double, 2>> point;
  auto crossing = [&](std::size_t i0, std::size_t j0, std::size_t i1, std::size_t j1) -> long {
    const long id = 2 * long(i0 * ny + j0) + (i1 == i0 ? 1 : 0);
    if (!point.count(id)) {
      const double a = Z(i0, j0), b = Z(i1, j1);
      const double t = a / (a - b);
      point[id] = {xs[i0] + t * (xs[i1] - xs[i0]), ys[j0] + t * (ys[j1] - ys[j0])};
    }
    return id;
  };
  std::vector<std::array<long, 2>> segs;
  for (std::size_t i = 0; i + 1 < nx; ++i) {
    for (std::size_t j = 0; j + 1 < ny; ++j) {
      const bool s00 = Z(i, j) > 0, s10 = Z(i + 1, j) > 0, s11 = Z(i + 1, j + 1) > 0, s01 = Z(i, j + 1) > 0;
      std::vector<long> e;  // crossings in cyclic order: bottom, right, top, left
      if (s00 != s10) e.push_back(crossing(i, j, i + 1, j));
      if (s10 != s11) e.push_back(crossing(i + 1, j, i + 1, j + 1));
      if (s01 != s11) e.push_back(crossing(i, j + 1, i + 1, j + 1));
      if (s00 != s01) e.push_back(crossing(i, j, i, j + 1));
      if (e.size() == 2) {
        segs.push_back({e[0], e[1]});
      } else if (e.size() == 4) {
        const double centre = 0.25 * (Z(i, j) + Z(i + 1, j) + Z(i + 1, j + 1) + Z(i, j + 1));
        if ((centre > 0) == s00) {
          segs.push_back({e[0], e[1]});
          segs.push_back({e[2], e[3]});
        } else {
          segs.push_back({e[0], e[3]});
          segs.push_back({e[1], e[2]});
        }
      }
    }
  }

  std::map<long, std::vector<std::size_t>> at;
  for (std::size_t s = 0; s < segs.size(); ++s)
    for (long id : segs[s]) at[id].push_back(s);
  std::vector<bool> used(segs.size(), false);
  auto other = [&](std::size_t s, long id) { return segs[s][0] == id ? segs[s][1] : segs[s][0]; };
  auto next_seg = [&](long id) -> long {
    for (std::size_t s : at[id])
      if (!used[s]) return long(s);
    return -1;
  };

  std::vector<Polyline> lines;
  auto trace = [&](std::size_t start) {
    used[start] = true;
    std::vector<long> ids = {segs[start][0], segs[start][1]};
    for (long s; (s = next_seg(ids.back())) >= 0;) {
      used[s] = true;
      ids.push_back(other(s, ids.back()));
    }
    for (long s; (s = next_seg(ids.front())) >= 0;) {
      used[s] = true;
      ids.insert(ids.begin(), other(s, ids.front()));
    }
    Polyline pl;
    for (long id : ids) pl.push_back(point[id]);
    lines.push_back(std::move(pl));
  };
  // open curves first, starting from their boundary ends
  for (std::size_t s = 0; s < segs.size(); ++s)
    if (!used[s] && (at[segs[s][0]].size() == 1 || at[segs[s][1]].size() == 1)) trace(s);
  for (std::size_t s = 0; s < segs.size(); ++s)
    if (!used[s]) trace(s);
  return lines;
}

// ---- commands

namespace {

struct Invocation {
  std::string command;
  json resolved;
  std::string config_text;
};

json analyze(const Model& m, const json& r) {
  const double d1 = r.value("d1", 1.0), d2 = r.value("d2", 1.0), l = r.value("l", 1.0);
  const Domain1D dom(l, 16);
  json out = {{"model", m.name()}, {"parameters", m.parameters()}, {"equilibrium", eq_json(m.equilibrium())},
              {"d1", d1}, {"l", l}};
  const int i_max = r.value("i_max", 16);
  if (m.species() == 1) {
    const ScalarDerivatives sd = m.scalar_derivatives();
    const auto mu = scalar_mode_eigenvalues(sd.f_u, sd.f_ubar, m.r(), d1, dom, i_max);
    if (!(mu[0] < 0)) throw Error(ErrorKind::BaseStateUnstable, "r (f_u + f_ubar) >= 0");
    out["mode_eigenvalues"] = mu;
    std::vector<int> unstable;
    for (int i = 1; i <= i_max; ++i)
      if (mu[i] > 0) unstable.push_back(i);
    out["steady_modes"] = unstable;
    try {
      out["critical_d"] = scalar_critical_diffusion(sd.f_u, m.r(), dom);
    } catch (const Error& e) {
      out["critical_d"] = nullptr;
      out["note"] = e.what();
    }
    return out;
  }
  out["d2"] = d2;
  const JacobianData J = m.jacobians(d1, d2);
  out["J_U"] = matrix(J.JU);
  out["J_Ubar"] = matrix(J.JUbar);
  const InstabilityReport rep = classify(J, l);
  const auto& s = rep.disp;
  out["case"] = to_string(rep.label);
  out["dispersion"] = {{"trace", s.tr}, {"det", s.det}, {"b", s.b}, {"Delta", s.Delta}, {"p_star", s.p_star},
                       {"p_minus", s.p_minus ? json(*s.p_minus) : json(nullptr)},
                       {"p_plus", s.p_plus ? json(*s.p_plus) : json(nullptr)}};
  out["I_S"] = interval_list(rep.I_S);
  out["I_H"] = interval_list(rep.I_H);
  out["steady_modes"] = rep.steady_modes;
  out["hopf_modes"] = rep.hopf_modes;
  return out;
}

json bifpoints(const Model& m, const ModelSpec& spec, const json& r) {
  const double d1 = r.value("d1", 1.0), d2 = r.value("d2", 1.0), l = r.value("l", 1.0);
  const int i_max = r.value("i_max", 8);
  json out = {{"model", spec.name}, {"l", l}};
  json pts = json::array();
  if (m.species() == 1) {
    const Domain1D dom(l, 16);
    const ScalarDerivatives sd = m.scalar_derivatives();
    for (const auto& p : scalar_bif_points(sd.f_u, m.r(), dom, i_max)) {
      json j = point_json(p);
      try {
        j["direction"] = direction_json(scalar_direction(m, dom, p.mode));
      } catch (const Error& e) {
        j["direction"] = {{"verdict", "degenerate"}, {"note", e.what()}};
      }
      pts.push_back(j);
    }
  } else if (spec.name == "coop" && !spec.localized) {
    const auto& c = dynamic_cast<const CoopLV&>(m);
    out["d2"] = d2;
    const auto bp = coop_bif_points(c, l, i_max);
    for (std::size_t k = 0; k < bp.points.size(); ++k) {
      json j = point_json(bp.points[k]);
      j["h"] = bp.h[k];
      pts.push_back(j);
    }
    const auto t = coop_direction_terms(c, l);
    out["direction_mode1"] = direction_json(coop_direction(c, l));
    out["direction_terms"] = {{"theta_path", t.theta_path}, {"pq_path", t.pq_path}, {"P", t.P}, {"Q", t.Q}};
    out["branch_curvature"] = coop_branch_curvature(c, l);
  } else if (spec.name == "rm" && !spec.localized) {
    const ParamMap p = m.parameters();
    const PredatorPreyCurves c(p.at("k"), p.at("theta"));
    out["d1"] = d1;
    out["d2"] = d2;
    const int n_max = r.value("i_max", 64);
    for (const auto& q : pp_hopf_points(c, d1, d2, l, n_max)) pts.push_back(point_json(q));
    for (const auto& q : pp_steady_points(c, d1, d2, l, std::max(n_max, 256))) pts.push_back(point_json(q));
    out["lambda_star"] = c.lambda_star();
    out["lambda_sharp"] = c.lambda_sharp();
    out["M"] = c.M();
    if (const auto w = pp_steady_window(c, d1, d2)) {
      out["steady_window"] = {{"lambda_lo", w->lam_lo},       {"lambda_hi", w->lam_hi},
                              {"lambda_plus", w->lam_plus},   {"lambda_minus", w->lam_minus},
                              {"p_plus_max", w->p_plus_max},  {"p_minus_min", w->p_minus_min},
                              {"l_steady_minus_1", w->l_steady_minus(1)}};
    }
    out["l_hopf_1"] = c.l_hopf(d1, d2, 1);
    out["scenario"] = to_string(pp_scenario(c, d1, d2, l));
  } else {
    // steady-state points in d1 with d2 fixed: Det(J_U - lambda_i D) = 0 is linear in d1
    const JacobianData J = m.jacobians(1.0, d2);
    out["d2"] = d2;
    for (int i = 1; i <= i_max; ++i) {
      const double lam = eigenvalue(l, i), g = J.gv() - lam * d2;
      if (g == 0) continue;
      const double d = (J.fu() - J.fv() * J.gu() / g) / lam;
      if (d > 0) pts.push_back(point_json({BifKind::SteadyState, "d1", d, i, Side::none, {}}));
    }
  }
  out["points"] = pts;
  return out;
}

struct Axis {
  double lo, hi;
  int n;
  std::vector<double> values() const {
    std::vector<double> v(n);
    for (int k = 0; k < n; ++k) v[k] = lo + (hi - lo) * k / (n - 1);
    return v;
  }
};

Axis axis_from(const json& j, const std::string& what) {
  Axis a{j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<int>()};
  if (!(a.hi > a.lo) || a.n < 2) usage(what + " range needs lo < hi and at least 2 points");
  return a;
}

Axis parse_axis(const std::string& s, const std::string& what) {
  std::stringstream ss(s);
  std::string a, b, n;
  if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, n, ':'))
    usage(what + " range must look like lo:hi:n");
  return axis_from(json::array({to_double(a, what), to_double(b, what), int(to_double(n, what))}), what);
}

std::string sweep(const Model& m, const ModelSpec& spec, const json& r, std::vector<std::string>& files,
                  const std::string& out_path, json& summary) {
  if (m.species() != 2) usage("sweep needs a two-species model");
  const double d1 = r.value("d1", 1.0), d2 = r.value("d2", 1.0);
  const bool rm = spec.name == "rm" && !spec.localized;
  const std::string param = rm ? "lambda" : spec.name == "coop" ? "beta" : "d1";
  Axis pa{1e-4, 0.02, 200};
  if (rm) {
    const double k = m.parameters().at("k");
    pa = {k * 1e-3, k * (1 - 1e-3), 200};
  }
  if (r.contains("range")) pa = axis_from(r["range"], param);
  Axis pax{0.0, 20.0, 401};
  if (r.contains("p_range")) pax = axis_from(r["p_range"], "p");
  const auto xs = pa.values(), ys = pax.values();

  std::vector<double> T(xs.size() * ys.size()), D(T.size());
  std::optional<PredatorPreyCurves> pp;
  if (rm) pp.emplace(m.parameters().at("k"), m.parameters().at("theta"));
  const JacobianData J0 = m.jacobians(1.0, d2);
  auto fill_row = [&](std::size_t i) {
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const double x = xs[i], p = ys[j];
      if (rm) {
        T[i * ys.size() + j] = pp->T(x, p, d1, d2);
        D[i * ys.size() + j] = pp->D(x, p, d1, d2);
      } else {
        const Eigen::Matrix2d A = J0.JU - p * Eigen::Vector2d(x, d2).asDiagonal().toDenseMatrix();
        T[i * ys.size() + j] = A.trace();
        D[i * ys.size() + j] = A.determinant();
      }
    }
  };
  const unsigned nt = std::min<unsigned>(worker_threads(), unsigned(xs.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < nt; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < xs.size(); i += nt) fill_row(i);
    });
  for (auto& t : pool) t.join();

  std::ostringstream grid;
  grid << param << ",p,T,D\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j)
      grid << fmt17(xs[i]) << ',' << fmt17(ys[j]) << ',' << fmt17(T[i * ys.size() + j]) << ','
           << fmt17(D[i * ys.size() + j]) << '\n';

  std::ostringstream cont;
  cont << "curve,line," << param << ",p\n";
  std::size_t nD = 0, nT = 0;
  for (const auto& [name, field, count] :
       {std::tuple{"D", &D, &nD}, std::tuple{"T", &T, &nT}}) {
    const auto lines = zero_contours(xs, ys, *field);
    *count = lines.size();
    for (std::size_t k = 0; k < lines.size(); ++k)
      for (const auto& pt : lines[k]) cont << name << ',' << k << ',' << fmt17(pt[0]) << ',' << fmt17(pt[1]) << '\n';
  }
  summary = {{"param", param}, {"grid_points", xs.size() * ys.size()}, {"threads", nt},
             {"D_zero_lines", nD}, {"T_zero_lines", nT}};
  if (!out_path.empty()) {
    const std::string cpath = out_path + ".contours.csv";
    write_file(out_path, grid.str());
    write_file(cpath, cont.str());
    files.push_back(out_path);
    files.push_back(cpath);
  }
  return grid.str();
}

void write_trajectory(const Trajectory& tr, const std::string& path, const std::string& format) {
  std::ostringstream os;
  const int N = tr.domain.N;
  const bool two = tr.species == 2;
  if (format == "long") {
    os << (two ? "t,x,u,v\n" : "t,x,u\n");
    for (std::size_t f = 0; f < tr.frames(); ++f)
      for (int j = 0; j < N; ++j) {
        os << fmt17(tr.times[f]) << ',' << fmt17(tr.domain.x(j)) << ',' << fmt17(tr.u[f][j]);
        if (two) os << ',' << fmt17(tr.v[f][j]);
        os << '\n';
      }
  } else {
    os << 't';
    for (int j = 0; j < N; ++j) os << ",u_" << j;
    if (two)
      for (int j = 0; j < N; ++j) os << ",v_" << j;
    os << '\n';
    for (std::size_t f = 0; f < tr.frames(); ++f) {
      os << fmt17(tr.times[f]);
      for (double x : tr.u[f]) os << ',' << fmt17(x);
      if (two)
        for (double x : tr.v[f]) os << ',' << fmt17(x);
      os << '\n';
    }
  }
  write_file(path, os.str());
}

void write_diagnostics(const Trajectory& tr, const std::string& path) {
  std::ostringstream os;
  os << (tr.species == 2 ? "t,avg_u,avg_v,l2,residual\n" : "t,avg_u,l2,residual\n");
  for (std::size_t f = 0; f < tr.frames(); ++f) {
    os << fmt17(tr.times[f]) << ',' << fmt17(tr.avg_u[f]);
    if (tr.species == 2) os << ',' << fmt17(tr.avg_v[f]);
    os << ',' << fmt17(tr.l2[f]) << ',' << fmt17(tr.residual[f]) << '\n';
  }
  write_file(path, os.str());
}

json simulate(const Model& m, const json& r, std::vector<std::string>& files, std::ostream& err) {
  const SimConfig cfg = sim_config(r, m);
  const RunResult res = run(m, cfg);
  json out = {{"model", m.name()}, {"outcome", outcome_json(res.outcome)}, {"frames", res.trajectory.frames()}};
  if (res.outcome.negative_steps > 0)
    err << "warning: negative densities in " << res.outcome.negative_steps << " steps (not clipped)\n";
  if (r.contains("expect")) {
    const json& e = r["expect"];
    bool ok = e.value("kind", std::string()) == to_string(res.outcome.kind);
    if (e.contains("mode")) ok = ok && e["mode"].get<int>() == res.outcome.mode;
    out["expect"] = e;
    out["matches"] = ok;
  }
  const std::string path = r.value("out", std::string());
  if (!path.empty()) {
    const std::string format = r.value("format", std::string("long"));
    if (format != "long" && format != "frames") usage("--format must be long or frames");
    write_trajectory(res.trajectory, path, format);
    write_diagnostics(res.trajectory, path + ".diag.csv");
    files.push_back(path);
    files.push_back(path + ".diag.csv");
  }
  return out;
}

// Reads a single frame (x,u[,v]), the long form (t,x,u[,v]) or the frames form (t,u_0,...).
json modes(const json& r) {
  const std::string in = r.value("in", std::string());
  if (in.empty()) usage("modes needs --in");
  std::istringstream ss(read_file(in));
  std::string header, line;
  std::getline(ss, header);
  std::vector<std::string> cols;
  {
    std::stringstream hs(header);
    for (std::string c; std::getline(hs, c, ',');) cols.push_back(trim(c));
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(ss, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) row.push_back(to_double(trim(c), in));
    if (row.size() != cols.size()) throw Error(ErrorKind::LengthMismatch, "ragged row in " + in);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) usage(in + " holds no data");
  const int species = r.value("species", 1);
  if (species != 1 && species != 2) usage("--species must be 1 or 2");
  const long frame = r.value("frame", -1L);

  std::vector<double> field, xs;
  if (cols.size() >= 2 && cols[0] == "t" && cols[1] == "x") {
    std::vector<double> times;
    for (const auto& row : rows)
      if (times.empty() || row[0] != times.back()) times.push_back(row[0]);
    const long f = frame < 0 ? long(times.size()) + frame : frame;
    if (f < 0 || f >= long(times.size())) usage("frame index out of range");
    const std::size_t col = 1 + species;
    if (col >= cols.size()) usage("species not present in " + in);
    for (const auto& row : rows)
      if (row[0] == times[f]) {
        xs.push_back(row[1]);
        field.push_back(row[col]);
      }
  } else if (!cols.empty() && cols[0] == "x") {
    const std::size_t col = species;
    if (col >= cols.size()) usage("species not present in " + in);
    for (const auto& row : rows) {
      xs.push_back(row[0]);
      field.push_back(row[col]);
    }
  } else if (!cols.empty() && cols[0] == "t") {
    const long f = frame < 0 ? long(rows.size()) + frame : frame;
    if (f < 0 || f >= long(rows.size())) usage("frame index out of range");
    const std::string prefix = species == 1 ? "u_" : "v_";
    for (std::size_t c = 1; c < cols.size(); ++c)
      if (cols[c].rfind(prefix, 0) == 0) field.push_back(rows[f][c]);
    if (field.empty()) usage("species not present in " + in);
  } else {
    usage("unrecognized header in " + in);
  }
  double l = r.value("l", 0.0);
  if (l <= 0 && xs.size() >= 2) l = double(xs.size()) * (xs[1] - xs[0]) / M_PI;
  if (l <= 0) l = 1.0;
  const Domain1D dom(l, int(field.size()));
  const ModeSpectrum s = decompose(field, dom);
  const double threshold = r.value("mode_threshold", 0.02);
  const double floor = r.value("min_amplitude", 1e-8) * std::max(1.0, std::abs(s.c[0]));
  json tab = json::array();
  for (int i = 1; i < dom.N; ++i)
    if (std::abs(s.c[i]) > floor) tab.push_back({{"mode", i}, {"amplitude", s.c[i]}});
  const auto dm = dominant_mode(s, threshold);
  return {{"species", species}, {"mean", s.c[0]}, {"dominant", dm ? json(*dm) : json(nullptr)}, {"modes", tab}};
}

void write_manifest(const Invocation& inv, const std::string& out_path, const std::vector<std::string>& files) {
  if (out_path.empty()) return;
  json man = {{"command", inv.command},
              {"version", NRD_VERSION},
              {"resolved", inv.resolved},
              {"resolved_sha256", sha256_hex(inv.resolved.dump())},
              {"config_sha256", inv.config_text.empty() ? json(nullptr) : json(sha256_hex(inv.config_text))},
              {"outputs", files}};
  write_file(out_path + ".manifest.json", man.dump(2) + "\n");
}

}  // namespace

// ---- entry point

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reaction-diffusion systems with spatially averaged kinetics on Neumann intervals", "nrd"};
  app.require_subcommand(1);
  app.set_version_flag("--version", NRD_VERSION);

  struct Flags {
    std::string model, params, config, out, format, in, range, p_range, stepper;
    double d1 = 0, d2 = 0, l = 0, dt = 0, t_end = 0, threshold = 0;
    int N = 0, i_max = 0, frame = 0, species = 0, snapshot_every = 0;
    std::uint64_t seed = 0;
    bool localized = false;
  } f;

  std::map<std::string, CLI::Option*> opts;
  auto common = [&](CLI::App* sc) {
    opts[sc->get_name() + "model"] = sc->add_option("--model", f.model, "logistic, membrane, general, coop, coop2, rm");
    opts[sc->get_name() + "params"] = sc->add_option("--params", f.params, "k=v,... (rm accepts lambda for m)");
    opts[sc->get_name() + "localized"] = sc->add_flag("--localized", f.localized, "replace averages by local values");
    opts[sc->get_name() + "d1"] = sc->add_option("--d1", f.d1, "diffusion of u (or d)");
    opts[sc->get_name() + "d2"] = sc->add_option("--d2", f.d2, "diffusion of v");
    opts[sc->get_name() + "l"] = sc->add_option("--l", f.l, "domain (0, l pi)");
    opts[sc->get_name() + "out"] = sc->add_option("--out", f.out, "output path");
    opts[sc->get_name() + "format"] = sc->add_option("--format", f.format, "long or frames");
    opts[sc->get_name() + "config"] = sc->add_option("--config", f.config, "JSON config (overrides flags)");
    opts[sc->get_name() + "seed"] = sc->add_option("--seed", f.seed, "seed for random initial conditions");
  };
  auto* a = app.add_subcommand("analyze", "classify the constant steady state");
  auto* b = app.add_subcommand("bifpoints", "closed-form bifurcation points");
  auto* s = app.add_subcommand("sweep", "T and D on a parameter-p grid with zero contours");
  auto* sim = app.add_subcommand("simulate", "integrate the PDE");
  auto* md = app.add_subcommand("modes", "cosine spectrum of a saved frame");
  for (auto* sc : {a, b, s, sim, md}) common(sc);
  opts["analyzei_max"] = a->add_option("--i-max", f.i_max, "highest mode listed");
  opts["bifpointsi_max"] = b->add_option("--i-max", f.i_max, "highest mode");
  opts["sweeprange"] = s->add_option("--range", f.range, "lo:hi:n for the bifurcation parameter");
  opts["sweepp_range"] = s->add_option("--p-range", f.p_range, "lo:hi:n for p");
  opts["simulateN"] = sim->add_option("--N", f.N, "grid cells");
  opts["simulatedt"] = sim->add_option("--dt", f.dt, "time step");
  opts["simulatet_end"] = sim->add_option("--t-end", f.t_end, "final time");
  opts["simulatestepper"] = sim->add_option("--stepper", f.stepper, "imex or rk4");
  opts["simulatesnapshot_every"] = sim->add_option("--snapshot-every", f.snapshot_every, "steps between frames");
  opts["modesin"] = md->add_option("--in", f.in, "frame CSV");
  opts["modesframe"] = md->add_option("--frame", f.frame, "frame index, negative counts from the end");
  opts["modesspecies"] = md->add_option("--species", f.species, "1 or 2");
  opts["modesmode_threshold"] = md->add_option("--threshold", f.threshold, "dominance threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code(ErrorKind::Usage);
  }

  Invocation inv;
  CLI::App* sc = app.get_subcommands().front();
  inv.command = sc->get_name();
  const std::string& c = inv.command;
  auto given = [&](const std::string& k) { return opts.count(c + k) && opts[c + k]->count() > 0; };

  try {
    json& r = inv.resolved;
    if (given("model")) r["model"] = f.model;
    if (given("params")) {
      const ModelSpec ps = parse_params(f.model, f.params);
      r["params"] = ps.params;
      if (!ps.ranges.empty()) r["ranges"] = ps.ranges;
    }
    if (given("localized")) r["localized"] = f.localized;
    if (given("d1")) r["d1"] = f.d1;
    if (given("d2")) r["d2"] = f.d2;
    if (given("l")) r["l"] = f.l;
    if (given("out")) r["out"] = f.out;
    if (given("format")) r["format"] = f.format;
    if (given("seed")) r["seed"] = f.seed;
    if (given("i_max")) r["i_max"] = f.i_max;
    if (given("range")) {
      const Axis ax = parse_axis(f.range, "--range");
      r["range"] = {ax.lo, ax.hi, ax.n};
    }
    if (given("p_range")) {
      const Axis ax = parse_axis(f.p_range, "--p-range");
      r["p_range"] = {ax.lo, ax.hi, ax.n};
    }
    if (given("N")) r["N"] = f.N;
    if (given("dt")) r["dt"] = f.dt;
    if (given("t_end")) r["t_end"] = f.t_end;
    if (given("stepper")) r["stepper"] = f.stepper;
    if (given("snapshot_every")) r["snapshot_every"] = f.snapshot_every;
    if (given("in")) r["in"] = f.in;
    if (given("frame")) r["frame"] = f.frame;
    if (given("species")) r["species"] = f.species;
    if (given("mode_threshold")) r["mode_threshold"] = f.threshold;
    if (given("config")) {
      inv.config_text = read_file(f.config);
      json cj;
      try {
        cj = json::parse(inv.config_text);
      } catch (const json::parse_error& e) {
        usage(std::string("config is not valid JSON: ") + e.what());
      }
      const bool manifest = cj.contains("resolved");
      if (manifest) cj = cj["resolved"];  // a manifest re-runs as a config
      for (const auto& [k, v] : cj.items())
        if (k != "command" && k != "description" && !(manifest && k == "out" && given("out"))) r[k] = v;
    }
    if (r.contains("params") && r["params"].is_string()) {
      const ModelSpec ps = parse_params(r.value("model", std::string()), r["params"].get<std::string>());
      r["params"] = ps.params;
      if (!ps.ranges.empty()) r["ranges"] = ps.ranges;
    }

    std::vector<std::string> files;
    const std::string out_path = r.value("out", std::string());
    json result;
    if (c == "modes") {
      result = modes(r);
    } else {
      const ModelSpec spec = model_spec(r);
      for (const auto& t : spec.ranges) {
        const std::string name = t.substr(0, t.size() - 6);
        if (c != "bifpoints" && c != "sweep") usage("'" + t + "' only applies to bifpoints and sweep");
        if (!(spec.name == "rm" && (name == "m" || name == "lambda")) && !(spec.name == "coop" && name == "beta"))
          usage("model '" + spec.name + "' cannot scan '" + name + "'");
      }
      ModelSpec concrete = spec;
      // scanning m: only k and theta enter the curves, any admissible m completes the model
      if (spec.name == "rm" && !spec.ranges.empty()) {
        if (!concrete.params.count("theta")) {
          concrete.params["theta"] = 1.0;
          r["params"]["theta"] = 1.0;
        }
        if (!spec.params.count("m") && !spec.params.count("lambda") && spec.params.count("k"))
          concrete.params["lambda"] = 0.5 * concrete.params["k"];
      }
      const ModelPtr m = build_model(concrete);
      if (c == "analyze") result = analyze(*m, r);
      else if (c == "bifpoints") result = bifpoints(*m, spec, r);
      else if (c == "simulate") result = simulate(*m, r, files, err);
      else {
        json summary;
        const std::string grid = sweep(*m, spec, r, files, out_path, summary);
        if (out_path.empty()) {
          out << grid;
          return 0;
        }
        result = summary;
      }
    }
    if (!out_path.empty() && c != "simulate" && c != "sweep") {
      write_file(out_path, result.dump(2) + "\n");
      files.push_back(out_path);
    }
    write_manifest(inv, out_path, files);
    out << result.dump(2) << "\n";
    return 0;
  } catch (const Error& e) {
    err << "nrd " << c << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    err << "nrd " << c << ": bad config value: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "nrd " << c << ": " << e.what() << "\n";
    return 3;
  }
}

}  // namespace nrd::cli
