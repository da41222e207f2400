#include "squash/io.hpp"

#include "test_util.hpp"

#include <catch2/catch.hpp>

#include <cstdio>
#include <filesystem>
#include <random>

using namespace squash;
using namespace squash::testing;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("squash-io-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("state file round trip is lossless") {
  TempDir dir;
  std::mt19937_64 rng(301);
  DensityMatrix rho = random_density({2, 3}, rng);
  std::string path = (dir.path / "state.json").string();
  save_state(rho, path);
  DensityMatrix back = load_state(path);
  CHECK(back.dims() == rho.dims());
  CHECK((back.data() - rho.data()).cwiseAbs().maxCoeff() <= 1e-15);

  DensityMatrix w = werner(3, 0.7);
  std::string wpath = (dir.path / "werner.json").string();
  save_state(w, wpath);
  DensityMatrix wback = load_state(wpath);
  CHECK((wback.data() - w.data()).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("state file validation") {
  TempDir dir;
  std::string path = (dir.path / "bad.json").string();
  {
    std::ofstream os(path);
    os << "{ not json";
  }
  CHECK_THROWS_AS(load_state(path), std::invalid_argument);
  {
    std::ofstream os(path);
    os << R"({"dims": [2], "matrix": {"re": [[2,0],[0,0]], "im": [[0,0],[0,0]]}})";
  }
  CHECK_THROWS_AS(load_state(path), std::invalid_argument);  // trace 2
  {
    std::ofstream os(path);
    os << R"({"dims": [2]})";
  }
  CHECK_THROWS_AS(load_state(path), std::invalid_argument);
  CHECK_THROWS_AS(load_state((dir.path / "missing.json").string()), std::invalid_argument);
}

TEST_CASE("run records serialize losslessly") {
  TempDir dir;
  RunRecord rec;
  rec.input_hash = "0123456789abcdef";
  rec.command = "lower";
  rec.parameters = json{{"m", 8}, {"k", 1}};
  rec.result.value = -0.0123456789;
  rec.result.value_clamped = 0.0;
  rec.result.kind = BoundKind::lower_sdp;
  rec.result.m = 8;
  rec.result.k = 1;
  rec.result.solver_status = SolveStatus::near_optimal;
  rec.result.primal_dual_gap = 3.5e-7;
  rec.result.wall_time = 12.25;
  rec.timestamp = utc_timestamp();

  std::string path = (dir.path / "record.json").string();
  save_record(rec, path);
  std::ifstream is(path);
  json j;
  is >> j;
  RunRecord back = record_from_json(j);
  CHECK(back.input_hash == rec.input_hash);
  CHECK(back.command == rec.command);
  CHECK(back.parameters == rec.parameters);
  CHECK(back.result.value == rec.result.value);
  CHECK(back.result.value_clamped == rec.result.value_clamped);
  CHECK(back.result.kind == rec.result.kind);
  CHECK(back.result.m == rec.result.m);
  CHECK(back.result.solver_status == rec.result.solver_status);
  CHECK(back.result.primal_dual_gap == rec.result.primal_dual_gap);
  CHECK(back.result.wall_time == rec.result.wall_time);
  CHECK(back.tool_version == rec.tool_version);
  CHECK(back.timestamp == rec.timestamp);
}

TEST_CASE("timestamps are ISO 8601 UTC") {
  std::string ts = utc_timestamp();
  REQUIRE(ts.size() == 20);
  CHECK(ts[4] == '-');
  CHECK(ts[10] == 'T');
  CHECK(ts.back() == 'Z');
}
