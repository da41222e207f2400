#pragma once

#include "squash/fdiv.hpp"
#include "squash/io.hpp"
#include "squash/moment.hpp"
#include "squash/upperbound.hpp"

#include <cstdio>
#include <iostream>

namespace squash::cli {

// Exit codes: 0 success, 2 input/validation error, 3 solver/optimizer
// failure, 4 resource cap.
inline constexpr int exit_ok = 0;
inline constexpr int exit_input = 2;
inline constexpr int exit_solver = 3;
inline constexpr int exit_resource = 4;

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline int cmd_werner(int d, double p, const std::string& out_path, std::ostream& err = std::cerr) {
  try {
    save_state(werner(d, p), out_path);
    return exit_ok;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return exit_input;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_input;
  }
}

inline int cmd_quad(int m, std::ostream& out, std::ostream& err = std::cerr) {
  try {
    QuadratureRule rule = gauss_radau(m);
    for (int i = 0; i < rule.m; ++i)
      out << fmt17(rule.nodes[i]) << "," << fmt17(rule.weights[i]) << "\n";
    return exit_ok;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return exit_input;
  }
}

struct LowerArgs {
  std::string state_path;
  int m = 8;
  int k = 1;
  SolverOptions solver;
  int basis_cap = 2000;
  std::string record_path;  // optional
};

inline int cmd_lower(const LowerArgs& args, std::ostream& out, std::ostream& err = std::cerr) {
  DensityMatrix rho({1}, Matrix::Identity(1, 1));
  try {
    rho = load_state(args.state_path);
    if (rho.validation_residual() > tol::warn)
      err << "warning: state residual " << rho.validation_residual() << " above " << tol::warn
          << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_input;
  }
  try {
    BoundResult res = lower_bound(rho, args.m, args.k, args.solver, {args.basis_cap, false});
    out << "lower_raw " << fmt9(res.value) << "\n";
    out << "lower_clamped " << fmt9(res.value_clamped) << "\n";
    out << "status " << to_string(res.solver_status) << "\n";
    if (!args.record_path.empty()) {
      RunRecord rec;
      rec.input_hash = state_hash(rho, args.m, args.k);
      rec.command = "lower";
      rec.parameters = json{{"m", args.m}, {"k", args.k}, {"abs_tol", args.solver.abs_tol},
                            {"rel_tol", args.solver.rel_tol}, {"max_iters", args.solver.max_iters}};
      rec.result = res;
      rec.timestamp = utc_timestamp();
      save_record(rec, args.record_path);
    }
    bool ok = res.solver_status == SolveStatus::optimal ||
              res.solver_status == SolveStatus::near_optimal;
    return ok ? exit_ok : exit_solver;
  } catch (const resource_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_resource;
  } catch (const environment_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_solver;
  } catch (const protocol_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_solver;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return exit_input;
  }
}

struct UpperArgs {
  std::string state_path;
  int d_D = 4, d_E = 4;
  int restarts = 20;
  int max_iters = 500;
  std::uint64_t seed = 1;
  std::string record_path;
};

inline int cmd_upper(const UpperArgs& args, std::ostream& out, std::ostream& err = std::cerr) {
  DensityMatrix rho({1}, Matrix::Identity(1, 1));
  try {
    rho = load_state(args.state_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_input;
  }
  try {
    BoundResult res = upper_bound(rho, args.d_D, args.d_E, args.restarts, args.max_iters, args.seed);
    out << "upper " << fmt9(res.value) << "\n";
    out << "status " << to_string(res.solver_status) << "\n";
    if (!args.record_path.empty()) {
      RunRecord rec;
      rec.input_hash = state_hash(rho);
      rec.command = "upper";
      rec.parameters = json{{"d_D", args.d_D}, {"d_E", args.d_E}, {"restarts", args.restarts},
                            {"max_iters", args.max_iters}, {"seed", args.seed}};
      rec.result = res;
      rec.timestamp = utc_timestamp();
      save_record(rec, args.record_path);
    }
    return exit_ok;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return exit_input;
  }
}

/// Grid syntax: "a:step:b" or a comma-separated list.
inline std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> grid;
  if (spec.find(':') != std::string::npos) {
    double a = 0, step = 0, b = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &a, &step, &b) != 3 || step <= 0)
      throw std::invalid_argument("bad grid spec: " + spec);
    for (double p = a; p <= b + 1e-12; p += step) grid.push_back(std::min(p, b));
  } else {
    std::istringstream is(spec);
    std::string tok;
    while (std::getline(is, tok, ',')) {
      if (tok.empty()) continue;
      grid.push_back(std::stod(tok));
    }
  }
  return grid;
}

struct Figure1Args {
  int d = 2;
  int m = 8;
  int k = 1;
  int d_D = 4, d_E = 4;
  int restarts = 20;
  int max_iters = 500;
  std::uint64_t seed = 1;
  std::string grid = "0:0.1:0.5";
  SolverOptions solver;
  int basis_cap = 2000;
  std::string out_csv;
};

/// Sweep p over the grid, running both bounds per point. CSV columns:
/// p, lower_raw, lower_clamped, upper, m, k, d_D, d_E, status_lower,
/// status_upper, seconds_lower, seconds_upper.
inline int cmd_figure1(const Figure1Args& args, std::ostream& err = std::cerr) {
  std::vector<double> grid;
  try {
    grid = parse_grid(args.grid);
    if (grid.empty()) throw std::invalid_argument("empty p grid");
    for (double p : grid)
      if (p < 0.0 || p > 1.0) throw std::invalid_argument("grid p out of [0,1]");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_input;
  }
  std::ofstream os(args.out_csv);
  if (!os) {
    err << "error: cannot open " << args.out_csv << "\n";
    return exit_input;
  }
  os << "p,lower_raw,lower_clamped,upper,m,k,d_D,d_E,status_lower,status_upper,"
        "seconds_lower,seconds_upper\n";
  try {
    for (double p : grid) {
      DensityMatrix rho = werner(args.d, p);
      BoundResult lo = lower_bound(rho, args.m, args.k, args.solver, {args.basis_cap, false});
      BoundResult hi =
          upper_bound(rho, args.d_D, args.d_E, args.restarts, args.max_iters, args.seed);
      os << fmt9(p) << "," << fmt9(lo.value) << "," << fmt9(lo.value_clamped) << ","
         << fmt9(hi.value) << "," << args.m << "," << args.k << "," << args.d_D << ","
         << args.d_E << "," << to_string(lo.solver_status) << "," << to_string(hi.solver_status)
         << "," << fmt9(lo.wall_time) << "," << fmt9(hi.wall_time) << "\n";
      os.flush();
    }
  } catch (const resource_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_resource;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_solver;
  }
  return exit_ok;
}

struct ExportArgs {
  std::string state_path;
  int m = 8;
  int k = 1;
  int basis_cap = 2000;
  std::string out_path;
};

inline int cmd_export(const ExportArgs& args, std::ostream& err = std::cerr) {
  DensityMatrix rho({1}, Matrix::Identity(1, 1));
  try {
    rho = load_state(args.state_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_input;
  }
  try {
    std::ofstream os(args.out_path);
    if (!os) throw std::invalid_argument("cannot open " + args.out_path);
    export_sdpa(rho, args.m, args.k, os, args.basis_cap);
    return exit_ok;
  } catch (const resource_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_resource;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_input;
  }
}

}  // namespace squash::cli
