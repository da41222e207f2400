#include "squash/solver.hpp"

#include <catch2/catch.hpp>

#include <fstream>
#include <sstream>

using namespace squash;

namespace {

SDPInstance::Constraint pin_cell(int side, int r, int c, double rhs) {
  SDPInstance::Constraint con;
  con.entries.emplace_back(r + static_cast<std::int64_t>(c) * side, 1.0);
  if (r != c) con.entries.emplace_back(c + static_cast<std::int64_t>(r) * side, 1.0);
  con.rhs = (r == c) ? rhs : 2.0 * rhs;
  return con;
}

}  // namespace

TEST_CASE("trivial pinned scalar") {
  // min tr(X), X = [x] >= 0, x pinned to 5.
  SDPInstance inst = make_instance(1, {{0, 1.0}}, {pin_cell(1, 0, 0, 5.0)});
  REQUIRE(!inst.classes.empty());
  SolveInfo info = solve(inst);
  CHECK(info.status == SolveStatus::optimal);
  CHECK(info.primal == Approx(5.0).margin(1e-7));
  CHECK(info.dual == Approx(5.0).margin(1e-7));
}

TEST_CASE("2x2 boundary optimum") {
  // min X01 + X10 s.t. X00 = X11 = 1, X >= 0; optimum -2 at X = [[1,-1],[-1,1]].
  std::vector<std::pair<std::int64_t, double>> obj{{2, 1.0}, {1, 1.0}};
  SDPInstance inst =
      make_instance(2, obj, {pin_cell(2, 0, 0, 1.0), pin_cell(2, 1, 1, 1.0)});
  REQUIRE(!inst.classes.empty());
  SolverOptions opts;
  opts.abs_tol = opts.rel_tol = 1e-9;
  SolveInfo info = solve(inst, opts);
  CHECK(info.status == SolveStatus::optimal);
  CHECK(info.primal == Approx(-2.0).margin(1e-6));
  CHECK(info.dual == Approx(-2.0).margin(1e-6));
}

TEST_CASE("2x2 feasibility against the analytic optimum") {
  // min 2c X01 + d X11 s.t. X00 = 1, X >= 0. With y = X11 >= x^2:
  // min 2cx + dx^2 at x = -c/d, value -c^2/d.
  for (auto [c, d] : {std::pair{0.8, 1.3}, std::pair{-0.4, 0.9}, std::pair{1.7, 2.5}}) {
    std::vector<std::pair<std::int64_t, double>> obj{{2, c}, {1, c}, {3, d}};
    SDPInstance inst = make_instance(2, obj, {pin_cell(2, 0, 0, 1.0)});
    SolverOptions opts;
    opts.abs_tol = opts.rel_tol = 1e-10;
    opts.max_iters = 200000;
    SolveInfo info = solve(inst, opts);
    CHECK(info.primal == Approx(-c * c / d).margin(1e-7));
    CHECK(info.status == SolveStatus::optimal);
  }
}

TEST_CASE("sign-tied cells") {
  // X01 = -X12 via a pairwise tie; diagonal pinned to 1; minimize
  // 2 X01 - 2 X12 = 4 X01. Compared against a dense feasibility scan.
  int side = 3;
  SDPInstance::Constraint tie;
  tie.entries.emplace_back(0 + 1 * 3, 1.0);  // (0,1)
  tie.entries.emplace_back(1 + 0 * 3, 1.0);
  tie.entries.emplace_back(1 + 2 * 3, 1.0);  // (1,2)
  tie.entries.emplace_back(2 + 1 * 3, 1.0);
  tie.rhs = 0.0;
  std::vector<std::pair<std::int64_t, double>> obj{{3, 1.0}, {1, 1.0}, {7, -1.0}, {5, -1.0}};
  SDPInstance inst = make_instance(
      side, obj,
      {pin_cell(3, 0, 0, 1.0), pin_cell(3, 1, 1, 1.0), pin_cell(3, 2, 2, 1.0), tie});
  REQUIRE(!inst.classes.empty());  // pairwise +- structure is partition-friendly
  SolverOptions opts;
  opts.abs_tol = opts.rel_tol = 1e-9;
  opts.max_iters = 200000;
  SolveInfo info = solve(inst, opts);

  double best = 1e9;
  for (int ia = -1000; ia <= 1000; ++ia) {
    double a = ia * 1e-3;
    for (int ib = -1000; ib <= 1000; ++ib) {
      double b = ib * 1e-3;
      Eigen::Matrix3d x;
      x << 1, a, b, a, 1, -a, b, -a, 1;
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(x);
      if (es.eigenvalues()(0) >= 0.0) best = std::min(best, 4.0 * a);
    }
  }
  CHECK(info.primal == Approx(best).margin(5e-3));
}

TEST_CASE("conflicting trace pins are infeasible") {
  // <I, X> pinned to both 1 and 2: not partition-representable, generic path.
  SDPInstance::Constraint tr1, tr2;
  for (int i = 0; i < 2; ++i) {
    tr1.entries.emplace_back(i + 2LL * i, 1.0);
    tr2.entries.emplace_back(i + 2LL * i, 1.0);
  }
  tr1.rhs = 1.0;
  tr2.rhs = 2.0;
  SDPInstance inst = make_instance(2, {{0, 1.0}}, {tr1, tr2});
  CHECK(inst.classes.empty());
  SolveInfo info = solve(inst);
  CHECK(info.status == SolveStatus::infeasible);
}

TEST_CASE("generic path solves a trace-constrained problem") {
  // min <diag(1,2), X> s.t. tr X = 1, X >= 0: optimum 1 at X = e0 e0^T.
  SDPInstance::Constraint tr;
  tr.entries.emplace_back(0, 1.0);
  tr.entries.emplace_back(3, 1.0);
  tr.rhs = 1.0;
  SDPInstance inst = make_instance(2, {{0, 1.0}, {3, 2.0}}, {tr});
  CHECK(inst.classes.empty());  // sum constraint, not partition-friendly
  SolverOptions opts;
  opts.abs_tol = opts.rel_tol = 1e-9;
  opts.max_iters = 100000;
  SolveInfo info = solve(inst, opts);
  CHECK(info.primal == Approx(1.0).margin(1e-6));
  CHECK(info.dual == Approx(1.0).margin(1e-5));
  CHECK(info.status == SolveStatus::optimal);
}

TEST_CASE("partition and explicit-constraint routes agree") {
  std::vector<std::pair<std::int64_t, double>> obj{{2, 1.0}, {1, 1.0}, {3, 0.7}};
  std::vector<SDPInstance::Constraint> cons{pin_cell(2, 0, 0, 1.0)};
  SDPInstance with_partition = make_instance(2, obj, cons);
  REQUIRE(!with_partition.classes.empty());

  SDPInstance generic = with_partition;
  generic.constraints = with_partition.equality_constraints();
  generic.classes.clear();
  generic.q.clear();

  SolverOptions opts;
  opts.abs_tol = opts.rel_tol = 1e-9;
  opts.max_iters = 200000;
  SolveInfo a = solve(with_partition, opts);
  SolveInfo b = solve(generic, opts);
  CHECK(a.primal == Approx(b.primal).margin(1e-6));
}

TEST_CASE("complex partition engine") {
  using detail::AdmmSolver;
  using detail::PartitionSdp;
  // Hermitian 2x2, diagonal pinned to 1, minimize 2 Re(M01): optimum -2.
  PartitionSdp<Complex> p;
  p.n = 2;
  {
    PartitionSdp<Complex>::Cls diag0, diag1, off;
    diag0.members = {{0, 0}};
    diag0.pinned = true;
    diag0.real_valued = true;
    diag0.pin = 1.0;
    diag1.members = {{3, 0}};
    diag1.pinned = true;
    diag1.real_valued = true;
    diag1.pin = 1.0;
    off.members = {{2, 0}, {1, 1}};  // M01 direct, M10 conjugate
    p.classes = {diag0, diag1, off};
    // obj = M01 + M10 = 2 Re(x): value convention 2 Re(conj(q) x) => q = 1.
    p.q = {Complex(0), Complex(0), Complex(1.0, 0.0)};
  }
  SolverOptions opts;
  opts.abs_tol = opts.rel_tol = 1e-9;
  AdmmSolver<Complex> solver(p, opts);
  SolveInfo info = solver.run();
  CHECK(info.primal == Approx(-2.0).margin(1e-6));
  CHECK(info.dual == Approx(-2.0).margin(1e-6));

  // q = i: value 2 Re(conj(i) x) = 2 Im(x); optimum -2 at x = -i.
  p.q[2] = Complex(0.0, 1.0);
  AdmmSolver<Complex> solver2(p, opts);
  SolveInfo info2 = solver2.run();
  CHECK(info2.primal == Approx(-2.0).margin(1e-6));
}

TEST_CASE("SDPA export golden bytes and determinism") {
  std::vector<std::pair<std::int64_t, double>> obj{{2, 1.0}, {1, 1.0}};
  SDPInstance inst =
      make_instance(2, obj, {pin_cell(2, 0, 0, 1.0), pin_cell(2, 1, 1, 1.0)});
  inst.meta = {3, 1, 2, 2, "deadbeef"};
  std::string a = sdpa::to_dat_s(inst);
  std::string b = sdpa::to_dat_s(inst);
  CHECK(a == b);
  CHECK(a.find("*m=3 k=1 dims=2x2 side=2 state_hash=deadbeef") != std::string::npos);
  std::istringstream is(a);
  auto header = sdpa::parse_dat_s_header(is);
  CHECK(header.m == 3);
  CHECK(header.k == 1);
  CHECK(header.d_A == 2);
  CHECK(header.d_B == 2);
  CHECK(header.side == 2);
  CHECK(header.state_hash == "deadbeef");
  CHECK(header.block_side == 2);
}

TEST_CASE("SDPA result parsing") {
  std::string text =
      "phase.value  = pdOPT\n"
      "   objValPrimal = +1.2345678901234e+00\n"
      "   objValDual   = +1.2345678800000e+00\n";
  auto r = sdpa::parse_result(text);
  CHECK(r.status == SolveStatus::optimal);
  CHECK(r.primal == Approx(1.2345678901234));
  CHECK(r.dual == Approx(1.23456788));

  auto r2 = sdpa::parse_result("phase.value = pINF_dFEAS\nobjValPrimal = 0\nobjValDual = 0\n");
  CHECK(r2.status == SolveStatus::infeasible);
  CHECK_THROWS_AS(sdpa::parse_result("garbage"), protocol_error);
}

TEST_CASE("external backend requires configuration") {
  SDPInstance inst = make_instance(1, {{0, 1.0}}, {pin_cell(1, 0, 0, 5.0)});
  SolverOptions opts;
  opts.backend = SolverBackend::external;
  opts.external_path = "";
  if (std::getenv("SQUASH_SDP_SOLVER") == nullptr) {
    CHECK_THROWS_AS(solve(inst, opts), environment_error);
  }
  opts.external_path = "/nonexistent/sdp-solver-binary";
  CHECK_THROWS_AS(solve(inst, opts), environment_error);
}

TEST_CASE("solver options validation") {
  SDPInstance inst = make_instance(1, {{0, 1.0}}, {pin_cell(1, 0, 0, 5.0)});
  SolverOptions opts;
  opts.abs_tol = -1.0;
  CHECK_THROWS_AS(solve(inst, opts), std::invalid_argument);
}
