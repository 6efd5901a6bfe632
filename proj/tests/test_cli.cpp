// Copyright 2026 The dynmatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "dynmatch/cli.hpp"
#include "json.hpp"

using namespace dynmatch::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("dynmatch_cli_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
};

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = parse_and_dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("parse_values") {
  CHECK(parse_values("2:10:2") == std::vector<double>{2, 4, 6, 8, 10});
  CHECK(parse_values("0.1:0.3:0.1") == std::vector<double>{0.1, 0.2, 0.3});
  CHECK(parse_values("1,2.5,7") == std::vector<double>{1, 2.5, 7});
  CHECK(parse_values("4") == std::vector<double>{4});
  CHECK_THROWS_AS(parse_values("a:b:c"), std::invalid_argument);
  CHECK_THROWS_AS(parse_values("1:5:0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_values("5:1:1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_values(""), std::invalid_argument);
}

TEST_CASE("stationary writes its artifacts and a manifest") {
  TempDir dir;
  const auto r = run({"stationary", "--policy", "patient", "--out", dir.str()});
  CHECK(r.code == kExitOk);
  REQUIRE(fs::exists(dir.path / "stationary.json"));
  REQUIRE(fs::exists(dir.path / "manifest.json"));
  const auto j = nlohmann::json::parse(slurp(dir.path / "stationary.json"));
  CHECK(j["policy"] == "patient");
  const auto manifest = nlohmann::json::parse(slurp(dir.path / "manifest.json"));
  CHECK(manifest.contains("subcommand"));
}

TEST_CASE("usage errors exit with status 2 and one line") {
  TempDir dir;
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"stationary", "--lambda", "0.6", "--out", dir.str()},
           {"stationary", "--d", "5", "--alpha", "0.01", "--out", dir.str()},
           {"stationary", "--no-such-flag"},
           {"simulate", "--audit", "--out", dir.str()},
           {"simulate", "--events", "100", "--time", "5", "--out", dir.str()},
           {"ode", "--initial", "1,2", "--out", dir.str()},
           {"scaling", "--policies", "greedy", "--assert-plateau", "--out", dir.str()},
           {"sweep", "--values", "x", "--out", dir.str()},
       }) {
    const auto r = run(args);
    CHECK(r.code == kExitUsage);
    CHECK_FALSE(r.err.empty());
    CHECK(r.err.find('\n') == r.err.size() - 1);
  }
}

TEST_CASE("a failed assertion exits with status 1") {
  TempDir dir;
  const auto r = run({"scaling", "--threshold", "1.0001", "--assert-plateau", "--out", dir.str()});
  CHECK(r.code == kExitVerdictFailed);
  CHECK(fs::exists(dir.path / "summary.json"));
  const auto ok = run({"ratio", "--values", "2:6:1", "--assert-monotone", "--out", dir.str()});
  CHECK(ok.code == kExitOk);
  CHECK(fs::exists(dir.path / "ratio.csv"));
}

TEST_CASE("same-seed sweeps are byte-identical") {
  TempDir a, b;
  const std::vector<std::string> common{"sweep", "--values", "4,8", "--m", "300", "--time", "6", "--warmup",
                                        "2",     "--reps",   "3",   "--seed", "5"};
  auto args_a = common;
  args_a.insert(args_a.end(), {"--jobs", "1", "--out", a.str()});
  auto args_b = common;
  args_b.insert(args_b.end(), {"--jobs", "3", "--out", b.str()});
  REQUIRE(run(args_a).code == kExitOk);
  REQUIRE(run(args_b).code == kExitOk);
  const auto csv = slurp(a.path / "sweep.csv");
  CHECK_FALSE(csv.empty());
  CHECK(csv == slurp(b.path / "sweep.csv"));
  CHECK(slurp(a.path / "summary.json") == slurp(b.path / "summary.json"));
}

TEST_CASE("simulate writes a trace when asked") {
  TempDir dir;
  const auto r =
      run({"simulate", "--m", "200", "--events", "2000", "--trace", "--format", "both", "--out", dir.str()});
  CHECK(r.code == kExitOk);
  CHECK(fs::exists(dir.path / "simulate.json"));
  CHECK(fs::exists(dir.path / "simulate.csv"));
  CHECK(slurp(dir.path / "trace.csv").rfind("time,event_kind,", 0) == 0);
}
