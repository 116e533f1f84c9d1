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

// Generators and reference oracles shared by the unit and acceptance tests.
// The oracles restate definitions directly and never call library code
// beyond plain data types.

#ifndef ABSTAIN_TESTS_SUPPORT_HPP_
#define ABSTAIN_TESTS_SUPPORT_HPP_

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "abstain/budget_forcer.hpp"
#include "abstain/types.hpp"

namespace abstain::testing {

// Seeded generator; each property test draws its own stream.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  std::mt19937_64& rng() { return rng_; }
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool chance(double p) { return uniform() < p; }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(integer(0, static_cast<int>(v.size()) - 1))];
  }

 private:
  std::mt19937_64 rng_;
};

struct RecordSetShape {
  int questions = 20;
  std::vector<int> budgets = {100};
  double parse_fail_rate = 0.1;
  // > 0: confidences snap to multiples of 1/quantize (exact ties).
  int quantize = 0;
};

inline AnswerRecord make_record(std::string qid, int budget, double confidence, bool correct,
                                bool parse_fail = false) {
  AnswerRecord r;
  r.question_id = std::move(qid);
  r.budget = budget;
  r.trace_tokens = budget;
  if (parse_fail) {
    r.logprob_sum = -INFINITY;
    r.confidence = 0.0;
    r.correct = false;
  } else {
    r.answer = correct ? "001" : "002";
    r.confidence = confidence;
    r.logprob_sum = std::log(confidence);
    r.correct = correct;
  }
  return r;
}

// A complete record set over shape.questions x shape.budgets.
inline std::vector<AnswerRecord> random_records(Gen& g, const RecordSetShape& shape) {
  std::vector<AnswerRecord> out;
  for (int b : shape.budgets) {
    for (int q = 0; q < shape.questions; ++q) {
      const bool pf = g.chance(shape.parse_fail_rate);
      double conf = g.uniform(1e-6, 1.0);
      if (shape.quantize > 0) {
        conf = std::round(conf * shape.quantize) / shape.quantize;
        if (conf <= 0.0) conf = 1.0 / shape.quantize;
      }
      if (g.chance(0.05)) conf = 1.0;
      out.push_back(make_record("q" + std::to_string(q), b, conf, g.chance(0.6), pf));
    }
  }
  return out;
}

inline double random_threshold(Gen& g) {
  switch (g.integer(0, 5)) {
    case 0:
      return 0.0;
    case 1:
      return 0.5;
    case 2:
      return 0.95;
    default:
      return g.uniform(0.0, 0.999999);
  }
}

inline Scenario random_scenario(Gen& g) {
  switch (g.integer(0, 3)) {
    case 0:
      return Scenario::exam();
    case 1:
      return Scenario::jeopardy();
    case 2:
      return Scenario::high_stakes();
    default:
      return {"custom", -g.uniform(0.0, 50.0)};
  }
}

// ---------------------------------------------------------------------------
// Oracles

struct OracleCell {
  std::size_t answered = 0, correct = 0, total = 0;
  long double coverage = 0, accuracy = 0, utility = 0;
};

// Straight from the definitions: answer iff confidence > tau; utility 1 for a
// correct answer, 0 for abstaining, r for a wrong answer.
inline OracleCell oracle_cell(const std::vector<AnswerRecord>& records, double tau, double r) {
  OracleCell c;
  long double u = 0;
  for (const auto& rec : records) {
    ++c.total;
    if (rec.confidence > tau) {
      ++c.answered;
      if (rec.correct) {
        ++c.correct;
        u += 1;
      } else {
        u += r;
      }
    }
  }
  c.coverage = static_cast<long double>(c.answered) / c.total;
  c.accuracy = c.answered ? static_cast<long double>(c.correct) / c.answered : 0;
  c.utility = u / c.total;
  return c;
}

inline std::vector<AnswerRecord> at_budget(const std::vector<AnswerRecord>& records, int b) {
  std::vector<AnswerRecord> out;
  for (const auto& r : records) {
    if (r.budget == b) out.push_back(r);
  }
  return out;
}

// Gaussian elimination with partial pivoting in long double on
// (A^T A) c = A^T y, A the Vandermonde matrix in x.
inline std::array<long double, 4> oracle_normal_equations(
    const std::vector<std::pair<long double, long double>>& xy) {
  long double m[4][5] = {};
  for (const auto& [x, y] : xy) {
    const long double p[4] = {1, x, x * x, x * x * x};
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) m[i][j] += p[i] * p[j];
      m[i][4] += p[i] * y;
    }
  }
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r) {
      if (std::fabs(m[r][col]) > std::fabs(m[piv][col])) piv = r;
    }
    for (int k = 0; k < 5; ++k) std::swap(m[col][k], m[piv][k]);
    for (int r = 0; r < 4; ++r) {
      if (r == col) continue;
      const long double f = m[r][col] / m[col][col];
      for (int k = col; k < 5; ++k) m[r][k] -= f * m[col][k];
    }
  }
  std::array<long double, 4> c{};
  for (int i = 0; i < 4; ++i) c[i] = m[i][4] / m[i][i];
  return c;
}

// Ordinary least-squares line, closed form.
inline long double oracle_linear_residual(const std::vector<std::pair<long double, long double>>& xy) {
  long double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const long double n = static_cast<long double>(xy.size());
  for (const auto& [x, y] : xy) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const long double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const long double icpt = (sy - slope * sx) / n;
  long double rss = 0;
  for (const auto& [x, y] : xy) {
    const long double e = y - (icpt + slope * x);
    rss += e * e;
  }
  return std::sqrt(rss);
}

// ---------------------------------------------------------------------------
// Fixtures

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("abstain-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class MemorySink final : public RecordSink {
 public:
  bool contains(const std::string& qid, int budget) const override {
    std::lock_guard lock(mu_);
    return keys_.count({qid, budget}) > 0;
  }
  void write(const AnswerRecord& r) override {
    std::lock_guard lock(mu_);
    keys_.insert({r.question_id, r.budget});
    records.push_back(r);
  }
  void write_trace(const ReasoningTrace& t) override {
    std::lock_guard lock(mu_);
    traces.push_back(t);
  }
  void preload(const std::string& qid, int budget) {
    std::lock_guard lock(mu_);
    keys_.insert({qid, budget});
  }

  std::vector<AnswerRecord> records;
  std::vector<ReasoningTrace> traces;

 private:
  mutable std::mutex mu_;
  std::set<std::pair<std::string, int>> keys_;
};

inline std::vector<Question> numbered_questions(int n, AnswerFormat format = AnswerFormat::kInteger3) {
  std::vector<Question> out;
  for (int i = 0; i < n; ++i) {
    Question q;
    q.id = "q" + std::to_string(i);
    q.prompt = "Question number " + std::to_string(i) + ": compute something.";
    q.gold = format == AnswerFormat::kMc4 ? std::string(1, static_cast<char>('A' + i % 4))
                                          : (i < 10 ? "00" : (i < 100 ? "0" : "")) + std::to_string(i);
    q.format = format;
    out.push_back(q);
  }
  return out;
}

}  // namespace abstain::testing

#endif  // ABSTAIN_TESTS_SUPPORT_HPP_
