#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nrd/model.hpp"
#include "nrd/solver.hpp"

namespace nrd::cli {

using json = nlohmann::json;

struct ModelSpec {
  std::string name;
  ParamMap params;
  bool localized = false;
  std::vector<std::string> ranges;  // bare "<name>-range" tokens
};

// "k=0.5,m=6,theta=1"; bare tokens must have the form <name>-range.
ModelSpec parse_params(const std::string& model, const std::string& kv);
ModelSpec model_spec(const json& resolved);
// rm accepts lambda in place of m.
ModelPtr build_model(const ModelSpec& spec);

SimConfig sim_config(const json& resolved, const Model& m);

std::string fmt17(double x);
std::string sha256_hex(std::string_view data);

using Polyline = std::vector<std::array<double, 2>>;
// Zero level set of z on the grid xs x ys (z row-major, one row per x) by marching squares,
// chained into polylines in deterministic order.
std::vector<Polyline> zero_contours(const std::vector<double>& xs, const std::vector<double>& ys,
                                    const std::vector<double>& z);

// Thread count for sweeps: hardware concurrency, capped by NRD_THREADS when set.
unsigned worker_threads();

// Outcome as the JSON object printed by simulate.
json outcome_json(const Outcome& o);

// Entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nrd::cli
