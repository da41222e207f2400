#pragma once

#include "squash/bound.hpp"
#include "squash/common.hpp"
#include "squash/qstate.hpp"

#include <json.hpp>

#include <chrono>
#include <ctime>
#include <fstream>

namespace squash {

using nlohmann::json;

/// JSON state schema: {"dims": [d_A, d_B], "matrix": {"re": [[..]], "im": [[..]]}},
/// row-major, side = d_A * d_B.
inline json state_to_json(const DensityMatrix& rho) {
  const Matrix& m = rho.data();
  json re = json::array(), im = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json re_row = json::array(), im_row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      re_row.push_back(m(r, c).real());
      im_row.push_back(m(r, c).imag());
    }
    re.push_back(std::move(re_row));
    im.push_back(std::move(im_row));
  }
  return json{{"dims", rho.dims()}, {"matrix", {{"re", std::move(re)}, {"im", std::move(im)}}}};
}

inline DensityMatrix state_from_json(const json& j) {
  if (!j.contains("dims") || !j.contains("matrix"))
    throw std::invalid_argument("state file: missing dims/matrix");
  std::vector<int> dims = j.at("dims").get<std::vector<int>>();
  const json& re = j.at("matrix").at("re");
  const json& im = j.at("matrix").at("im");
  std::size_t side = re.size();
  if (im.size() != side) throw std::invalid_argument("state file: re/im shape mismatch");
  Matrix m(side, side);
  for (std::size_t r = 0; r < side; ++r) {
    if (re[r].size() != side || im[r].size() != side)
      throw std::invalid_argument("state file: matrix is not square");
    for (std::size_t c = 0; c < side; ++c)
      m(r, c) = Complex(re[r][c].get<double>(), im[r][c].get<double>());
  }
  return DensityMatrix(std::move(dims), std::move(m));
}

inline void save_state(const DensityMatrix& rho, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << state_to_json(rho).dump(1) << "\n";
}

inline DensityMatrix load_state(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open state file: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("state file is not valid JSON: ") + e.what());
  }
  return state_from_json(j);
}

inline json bound_to_json(const BoundResult& b) {
  return json{{"value", b.value},
              {"value_clamped", b.value_clamped},
              {"kind", to_string(b.kind)},
              {"m", b.m},
              {"k", b.k},
              {"d_D", b.d_D},
              {"d_E", b.d_E},
              {"restarts", b.restarts},
              {"solver_status", to_string(b.solver_status)},
              {"primal_dual_gap", b.primal_dual_gap},
              {"wall_time", b.wall_time}};
}

inline BoundResult bound_from_json(const json& j) {
  BoundResult b;
  b.value = j.at("value").get<double>();
  b.value_clamped = j.at("value_clamped").get<double>();
  std::string kind = j.at("kind").get<std::string>();
  b.kind = kind == "lower_sdp" ? BoundKind::lower_sdp
                               : (kind == "upper_heuristic" ? BoundKind::upper_heuristic
                                                            : BoundKind::pure_closed_form);
  b.m = j.at("m").get<int>();
  b.k = j.at("k").get<int>();
  b.d_D = j.at("d_D").get<int>();
  b.d_E = j.at("d_E").get<int>();
  b.restarts = j.at("restarts").get<int>();
  std::string st = j.at("solver_status").get<std::string>();
  for (auto s : {SolveStatus::optimal, SolveStatus::near_optimal, SolveStatus::infeasible,
                 SolveStatus::unbounded, SolveStatus::numerical_trouble})
    if (st == to_string(s)) b.solver_status = s;
  b.primal_dual_gap = j.at("primal_dual_gap").get<double>();
  b.wall_time = j.at("wall_time").get<double>();
  return b;
}

/// One record per bound computation: enough to reproduce and audit the run.
struct RunRecord {
  std::string input_hash;
  std::string command;
  json parameters;
  BoundResult result;
  std::string tool_version = "0.1.0";
  std::string timestamp;  // ISO 8601 UTC
};

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json record_to_json(const RunRecord& r) {
  return json{{"input_hash", r.input_hash}, {"command", r.command},
              {"parameters", r.parameters}, {"result", bound_to_json(r.result)},
              {"tool_version", r.tool_version}, {"timestamp", r.timestamp}};
}

inline RunRecord record_from_json(const json& j) {
  RunRecord r;
  r.input_hash = j.at("input_hash").get<std::string>();
  r.command = j.at("command").get<std::string>();
  r.parameters = j.at("parameters");
  r.result = bound_from_json(j.at("result"));
  r.tool_version = j.at("tool_version").get<std::string>();
  r.timestamp = j.at("timestamp").get<std::string>();
  return r;
}

inline void save_record(const RunRecord& r, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << record_to_json(r).dump(1) << "\n";
}

}  // namespace squash
