// squash: semidefinite lower bounds and heuristic upper bounds on the
// squashed entanglement of bipartite quantum states.

#include "squash/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Bounds on the squashed entanglement of bipartite states"};
  app.require_subcommand(1);

  // werner
  auto* werner_cmd = app.add_subcommand("werner", "Write a Werner state to a JSON state file");
  int w_d = 2;
  double w_p = 0.0;
  std::string w_out;
  werner_cmd->add_option("--d", w_d, "local dimension (>= 2)");
  werner_cmd->add_option("--p", w_p, "symmetric-subspace weight in [0,1]");
  werner_cmd->add_option("--out", w_out, "output path")->required();

  // quad
  auto* quad_cmd = app.add_subcommand("quad", "Print Gauss-Radau nodes/weights as CSV");
  int q_m = 0;
  quad_cmd->add_option("--m", q_m, "number of nodes")->required();

  // lower
  auto* lower_cmd = app.add_subcommand("lower", "SDP lower bound on E_sq");
  squash::cli::LowerArgs lo;
  lo.solver.abs_tol = lo.solver.rel_tol = 1e-5;
  lo.solver.max_iters = 20000;
  std::string lo_backend = "embedded";
  lower_cmd->add_option("--state", lo.state_path, "input state file")->required();
  lower_cmd->add_option("--m", lo.m, "quadrature nodes");
  lower_cmd->add_option("--k", lo.k, "relaxation level (1 or 2)");
  lower_cmd->add_option("--tol", lo.solver.abs_tol, "solver tolerance (abs = rel)");
  lower_cmd->add_option("--max-iters", lo.solver.max_iters, "solver iteration cap");
  lower_cmd->add_option("--time-limit", lo.solver.time_limit, "solver time limit, seconds");
  lower_cmd->add_option("--backend", lo_backend, "embedded | external");
  lower_cmd->add_option("--cap", lo.basis_cap, "monomial basis cap");
  lower_cmd->add_option("--out", lo.record_path, "write a run record JSON here");

  // upper
  auto* upper_cmd = app.add_subcommand("upper", "Heuristic upper bound on E_sq");
  squash::cli::UpperArgs up;
  upper_cmd->add_option("--state", up.state_path, "input state file")->required();
  upper_cmd->add_option("--dD", up.d_D, "extension dimension d_D");
  upper_cmd->add_option("--dE", up.d_E, "extension dimension d_E");
  upper_cmd->add_option("--restarts", up.restarts, "multi-start count");
  upper_cmd->add_option("--iters", up.max_iters, "iterations per restart");
  upper_cmd->add_option("--seed", up.seed, "RNG seed");
  upper_cmd->add_option("--out", up.record_path, "write a run record JSON here");

  // figure1
  auto* fig_cmd = app.add_subcommand("figure1", "Sweep Werner states, both bounds, CSV output");
  squash::cli::Figure1Args fig;
  fig.solver.abs_tol = fig.solver.rel_tol = 1e-5;
  fig.solver.max_iters = 20000;
  fig_cmd->add_option("--d", fig.d, "local dimension");
  fig_cmd->add_option("--m", fig.m, "quadrature nodes");
  fig_cmd->add_option("--k", fig.k, "relaxation level");
  fig_cmd->add_option("--dD", fig.d_D, "upper-bound extension dimension d_D");
  fig_cmd->add_option("--dE", fig.d_E, "upper-bound extension dimension d_E");
  fig_cmd->add_option("--restarts", fig.restarts, "upper-bound restarts");
  fig_cmd->add_option("--iters", fig.max_iters, "upper-bound iterations per restart");
  fig_cmd->add_option("--seed", fig.seed, "upper-bound RNG seed");
  fig_cmd->add_option("--grid", fig.grid, "p grid: a:step:b or comma list");
  fig_cmd->add_option("--tol", fig.solver.abs_tol, "solver tolerance");
  fig_cmd->add_option("--max-iters", fig.solver.max_iters, "solver iteration cap");
  fig_cmd->add_option("--cap", fig.basis_cap, "monomial basis cap");
  fig_cmd->add_option("--out", fig.out_csv, "output CSV path")->required();

  // export
  auto* export_cmd = app.add_subcommand("export", "Export the SDP in SDPA sparse format");
  squash::cli::ExportArgs ex;
  export_cmd->add_option("--state", ex.state_path, "input state file")->required();
  export_cmd->add_option("--m", ex.m, "quadrature nodes");
  export_cmd->add_option("--k", ex.k, "relaxation level");
  export_cmd->add_option("--cap", ex.basis_cap, "monomial basis cap");
  export_cmd->add_option("--out", ex.out_path, "output .dat-s path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : squash::cli::exit_input;
  }

  if (werner_cmd->parsed()) return squash::cli::cmd_werner(w_d, w_p, w_out);
  if (quad_cmd->parsed()) return squash::cli::cmd_quad(q_m, std::cout);
  if (lower_cmd->parsed()) {
    if (lo_backend == "external")
      lo.solver.backend = squash::SolverBackend::external;
    else if (lo_backend != "embedded") {
      std::cerr << "error: unknown backend " << lo_backend << "\n";
      return squash::cli::exit_input;
    }
    lo.solver.rel_tol = lo.solver.abs_tol;
    return squash::cli::cmd_lower(lo, std::cout);
  }
  if (upper_cmd->parsed()) return squash::cli::cmd_upper(up, std::cout);
  if (fig_cmd->parsed()) {
    fig.solver.rel_tol = fig.solver.abs_tol;
    return squash::cli::cmd_figure1(fig);
  }
  if (export_cmd->parsed()) return squash::cli::cmd_export(ex);
  return squash::cli::exit_input;
}
