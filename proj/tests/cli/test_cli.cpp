/*
 * Copyright 2026 The Abstain Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Drives the installed binary as a subprocess.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "httplib.h"

namespace {

namespace fs = std::filesystem;

const fs::path kGolden = fs::path(ABSTAIN_TEST_DATA_DIR) / "golden";
const std::string kCli = ABSTAIN_CLI_PATH;

struct Result {
  int code = -1;
  std::string output;  // stdout and stderr interleaved
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + kCli + "' " + args + " 2>&1";
  Result r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.output.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Scratch {
 public:
  Scratch() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("abstain_cli_" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string str() const { return path_.string(); }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

std::string golden_run(const Scratch& dir) {
  return "run --backend scripted --script " + (kGolden / "script.json").string() +
         " --questions " + (kGolden / "questions.jsonl").string() +
         " --budgets 4,8,12,16 --timestamp 2026-01-01T00:00:00Z --out " + dir.str();
}

TEST(Cli, HelpAndBadFlags) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("run --no-such-flag").code, 1);
  EXPECT_EQ(run("").code, 1);
}

TEST(Cli, GoldenRunSurfaceAndResume) {
  Scratch dir;
  const auto first = run(golden_run(dir));
  ASSERT_EQ(first.code, 0) << first.output;
  EXPECT_NE(first.output.find("\"records_written\":20"), std::string::npos);
  EXPECT_EQ(slurp(dir / "records.jsonl"), slurp(kGolden / "records.jsonl"));

  const auto again = run(golden_run(dir));
  EXPECT_EQ(again.code, 1);
  EXPECT_NE(again.output.find("--resume"), std::string::npos);

  const auto resumed = run(golden_run(dir) + " --resume");
  ASSERT_EQ(resumed.code, 0) << resumed.output;
  EXPECT_NE(resumed.output.find("\"records_written\":0"), std::string::npos) << resumed.output;
  EXPECT_EQ(slurp(dir / "records.jsonl"), slurp(kGolden / "records.jsonl"));

  const auto surf = run("surface --records " + (dir / "records.jsonl").string() + " --out " +
                        dir.str() + " --timestamp 2026-01-01T00:00:00Z");
  ASSERT_EQ(surf.code, 0) << surf.output;
  std::string body = slurp(dir / "surface.csv");
  body.erase(0, body.find('\n') + 1);
  EXPECT_EQ(body, slurp(kGolden / "surface_body.csv"));

  const auto gaps = run("surface --records " + (dir / "records.jsonl").string() +
                        " --budgets 4,8,32 --out " + dir.str());
  EXPECT_EQ(gaps.code, 1);
  EXPECT_NE(gaps.output.find("32"), std::string::npos) << gaps.output;

  const auto plot = run("plot --kind utility_surface --input " + (dir / "surface.json").string() +
                        " --scenario jeopardy --out " + dir.str());
  ASSERT_EQ(plot.code, 0) << plot.output;
  EXPECT_TRUE(fs::exists(dir / "utility_surface_jeopardy.svg"));
  EXPECT_EQ(run("plot --kind pie --input " + (dir / "surface.json").string() + " --out " +
                dir.str()).code,
            1);

  const auto fit = run("fit --records " + (dir / "records.jsonl").string() + " --axis logprob");
  EXPECT_EQ(fit.code, 0) << fit.output;
  EXPECT_NE(fit.output.find("\"axis\": \"logprob\""), std::string::npos);
}

TEST(Cli, ValidationErrorsExitOne) {
  Scratch dir;
  const auto r = run(golden_run(dir) + " --concurrency 0");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("concurrency"), std::string::npos);
  EXPECT_EQ(run(golden_run(dir) + " --thresholds 0.5,1.0").code, 1);
  EXPECT_EQ(run("run --backend scripted --script /nonexistent.json --questions " +
                (kGolden / "questions.jsonl").string() + " --budgets 4 --out " + dir.str())
                .code,
            1);
}

TEST(Cli, UnreachableEndpointExitsTwo) {
  Scratch dir;
  std::ofstream(dir / "q.jsonl") << "{\"id\":\"a\",\"question\":\"x\",\"answer\":\"1\"}\n";
  const auto r = run("run --endpoint http://127.0.0.1:9/v1/completions --model m --delimiter "
                     "'</think>' --timeout 0.5 --budgets 8 --questions " +
                     (dir / "q.jsonl").string() + " --out " + dir.str());
  EXPECT_EQ(r.code, 2) << r.output;
}

TEST(Cli, BearerTokenIsNeverPrinted) {
  httplib::Server server;
  std::mutex mu;
  std::string seen_auth;
  server.Post(".*", [&](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard<std::mutex> lock(mu);
      seen_auth = req.get_header_value("Authorization");
    }
    res.status = 401;
    res.set_content("{\"error\":\"invalid api key\"}", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  Scratch dir;
  std::ofstream(dir / "q.jsonl") << "{\"id\":\"a\",\"question\":\"x\",\"answer\":\"1\"}\n";
  const std::string token = "sk-test-7f3a9c1e55d0";
  const auto r = run("run --endpoint http://127.0.0.1:" + std::to_string(port) +
                         "/v1/completions --model m --delimiter '</think>' --api-key-env "
                         "ABSTAIN_CLI_TEST_TOKEN --budgets 8 --questions " +
                         (dir / "q.jsonl").string() + " --out " + dir.str(),
                     "ABSTAIN_CLI_TEST_TOKEN=" + token);
  server.stop();
  th.join();
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_EQ(seen_auth, "Bearer " + token);
  EXPECT_EQ(r.output.find(token), std::string::npos);
  for (const auto& entry : fs::recursive_directory_iterator(dir / "")) {
    if (entry.is_regular_file()) EXPECT_EQ(slurp(entry.path()).find(token), std::string::npos);
  }
}

}  // namespace
