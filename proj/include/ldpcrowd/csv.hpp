//
// Copyright 2026 The ldpcrowd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// CSV interchange. Answers: header worker_id,task_id,answer; one row per
// non-NULL cell; NULLs are simply absent. Truths: header task_id,truth.
// UTF-8, LF line endings, '.' decimal separator, no quoting (ids must not
// contain commas).

#ifndef LDPCROWD_CSV_HPP_
#define LDPCROWD_CSV_HPP_

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ldpcrowd/core.hpp"

namespace ldpcrowd {
namespace detail {

inline std::string format_double(double v) {
  // Shortest representation that round-trips exactly.
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("failed to format number");
  return std::string(buf, end);
}

inline double parse_double(const std::string& field, const std::string& where) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::runtime_error(where + ": cannot parse number '" + field + "'");
  }
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

struct CsvReader {
  std::ifstream stream;
  std::string path;
  size_t line_no = 0;

  explicit CsvReader(const std::string& p) : stream(p), path(p) {
    if (!stream) throw std::runtime_error("cannot open " + p);
  }

  std::optional<std::string> next_line() {
    std::string line;
    while (std::getline(stream, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      return line;
    }
    return std::nullopt;
  }

  std::string location() const { return path + ":" + std::to_string(line_no); }
};

}  // namespace detail

// Maps external string ids to dense indices in first-seen order.
struct IdMap {
  std::vector<std::string> ids;
  std::unordered_map<std::string, int32_t> index;

  int32_t intern(const std::string& id) {
    auto [it, inserted] = index.try_emplace(id, static_cast<int32_t>(ids.size()));
    if (inserted) ids.push_back(id);
    return it->second;
  }
};

// Loads an answer matrix. When a domain is given, every answer is validated
// against it; otherwise values are accepted as-is (perturbed matrices hold
// out-of-domain reals by design).
inline AnswerMatrix load_answers_csv(const std::string& path,
                                     std::optional<AnswerDomain> domain = std::nullopt) {
  if (domain) domain->validate();
  detail::CsvReader reader(path);
  auto header = reader.next_line();
  if (!header) throw std::runtime_error(path + ": empty file");
  if (*header != "worker_id,task_id,answer") {
    throw std::runtime_error(reader.location() + ": expected header worker_id,task_id,answer");
  }

  IdMap workers;
  IdMap tasks;
  std::vector<std::vector<AnswerEntry>> rows;
  std::unordered_set<int64_t> seen;  // (worker << 32) | task
  size_t entries = 0;
  while (auto line = reader.next_line()) {
    const auto fields = detail::split_csv_line(*line);
    if (fields.size() != 3) {
      throw std::runtime_error(reader.location() + ": expected 3 fields, got " +
                               std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw std::runtime_error(reader.location() + ": empty id");
    }
    const int32_t w = workers.intern(fields[0]);
    const int32_t t = tasks.intern(fields[1]);
    const double v = detail::parse_double(fields[2], reader.location());
    if (domain && !domain->contains(v)) {
      throw std::runtime_error(reader.location() + ": answer " + fields[2] +
                               " outside declared domain");
    }
    if (!seen.insert((static_cast<int64_t>(w) << 32) | static_cast<int64_t>(t)).second) {
      throw std::runtime_error(reader.location() + ": duplicate answer for worker " + fields[0] +
                               ", task " + fields[1]);
    }
    if (static_cast<size_t>(w) >= rows.size()) rows.resize(static_cast<size_t>(w) + 1);
    rows[static_cast<size_t>(w)].push_back({t, v});
    ++entries;
  }
  if (entries == 0) throw std::runtime_error(path + ": no answer rows");
  const auto task_count = static_cast<int32_t>(tasks.ids.size());
  return AnswerMatrix(task_count, std::move(rows), std::move(workers.ids), std::move(tasks.ids));
}

inline void save_answers_csv(const AnswerMatrix& matrix, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: keep LF on all platforms
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "worker_id,task_id,answer\n";
  const auto worker_id = [&](int32_t i) {
    return matrix.worker_ids().empty() ? "w" + std::to_string(i)
                                       : matrix.worker_ids()[static_cast<size_t>(i)];
  };
  const auto task_id = [&](int32_t j) {
    return matrix.task_ids().empty() ? "t" + std::to_string(j)
                                     : matrix.task_ids()[static_cast<size_t>(j)];
  };
  for (int32_t i = 0; i < matrix.workers(); ++i) {
    for (const auto& e : matrix.row(i)) {
      out << worker_id(i) << ',' << task_id(e.task) << ',' << detail::format_double(e.value)
          << '\n';
    }
  }
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

// Loads truths aligned to the matrix task indexing: every task must receive
// exactly one truth, and every row must reference a known task id.
inline GroundTruth load_truth_csv(const std::string& path, const AnswerMatrix& matrix) {
  detail::CsvReader reader(path);
  auto header = reader.next_line();
  if (!header) throw std::runtime_error(path + ": empty file");
  if (*header != "task_id,truth") {
    throw std::runtime_error(reader.location() + ": expected header task_id,truth");
  }
  std::unordered_map<std::string, int32_t> task_index;
  for (int32_t j = 0; j < matrix.tasks(); ++j) {
    const std::string id = matrix.task_ids().empty() ? "t" + std::to_string(j)
                                                     : matrix.task_ids()[static_cast<size_t>(j)];
    task_index.emplace(id, j);
  }

  GroundTruth truth(static_cast<size_t>(matrix.tasks()),
                    std::numeric_limits<double>::quiet_NaN());
  while (auto line = reader.next_line()) {
    const auto fields = detail::split_csv_line(*line);
    if (fields.size() != 2) {
      throw std::runtime_error(reader.location() + ": expected 2 fields, got " +
                               std::to_string(fields.size()));
    }
    const auto it = task_index.find(fields[0]);
    if (it == task_index.end()) {
      throw std::runtime_error(reader.location() + ": unknown task id '" + fields[0] + "'");
    }
    if (!std::isnan(truth[static_cast<size_t>(it->second)])) {
      throw std::runtime_error(reader.location() + ": duplicate truth for task " + fields[0]);
    }
    truth[static_cast<size_t>(it->second)] = detail::parse_double(fields[1], reader.location());
  }
  for (size_t j = 0; j < truth.size(); ++j) {
    if (std::isnan(truth[j])) {
      throw std::runtime_error(path + ": no truth for task index " + std::to_string(j));
    }
  }
  return truth;
}

inline void save_truth_csv(const GroundTruth& truth, const AnswerMatrix& matrix,
                           const std::string& path) {
  if (truth.size() != static_cast<size_t>(matrix.tasks())) {
    throw std::invalid_argument("truth length must equal the task count");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "task_id,truth\n";
  for (int32_t j = 0; j < matrix.tasks(); ++j) {
    const std::string id = matrix.task_ids().empty() ? "t" + std::to_string(j)
                                                     : matrix.task_ids()[static_cast<size_t>(j)];
    out << id << ',' << detail::format_double(truth[static_cast<size_t>(j)]) << '\n';
  }
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

}  // namespace ldpcrowd

#endif  // LDPCROWD_CSV_HPP_
