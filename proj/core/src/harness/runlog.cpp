/*
 Copyright 2026 The MDGPS Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/


#include "mdgps/harness/runlog.hpp"

#include <fmt/format.h>

#include <charconv>
#include <sstream>

#include "mdgps/errors.hpp"

namespace mdgps::harness {

namespace {

constexpr const char* kCostColumns[] = {"l_prev_prev",    "l_prev_prev_pi", "l_prev_cur",
                                        "l_prev_cur_pi",  "l_cur_cur",      "l_cur_cur_pi"};
constexpr const char* kSummaryColumns[] = {
    "sample_return",  "local_return",          "global_return", "global_success",
    "global_final_distance", "sample_final_distance", "s_step_loss", "bound_max_epsilon",
    "bound_cost",     "wall_seconds"};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

}  // namespace

std::vector<std::string> runlog_columns(int num_conditions) {
  std::vector<std::string> cols{"iteration"};
  for (int i = 0; i < num_conditions; ++i) {
    cols.push_back(fmt::format("eps_{}", i));
    cols.push_back(fmt::format("eta_{}", i));
    cols.push_back(fmt::format("kl_{}", i));
  }
  for (const char* c : kCostColumns) cols.emplace_back(c);
  for (const char* c : kSummaryColumns) cols.emplace_back(c);
  return cols;
}

std::vector<double> runlog_row(const IterationRecord& r) {
  std::vector<double> row{static_cast<double>(r.iteration)};
  ConditionCosts mean;
  for (const auto& c : r.conditions) {
    row.push_back(c.epsilon);
    row.push_back(c.eta);
    row.push_back(c.achieved_kl);
    mean.prev_prev += c.costs.prev_prev;
    mean.prev_prev_pi += c.costs.prev_prev_pi;
    mean.prev_cur += c.costs.prev_cur;
    mean.prev_cur_pi += c.costs.prev_cur_pi;
    mean.cur_cur += c.costs.cur_cur;
    mean.cur_cur_pi += c.costs.cur_cur_pi;
  }
  const double n = static_cast<double>(std::max<std::size_t>(r.conditions.size(), 1));
  for (double v : {mean.prev_prev, mean.prev_prev_pi, mean.prev_cur, mean.prev_cur_pi, mean.cur_cur,
                   mean.cur_cur_pi}) {
    row.push_back(v / n);
  }
  for (double v : {r.sample_return, r.local_return, r.global_return, r.global_success,
                   r.global_final_distance, r.sample_final_distance, r.s_step_loss,
                   r.bound_max_epsilon, r.bound_cost, r.wall_seconds}) {
    row.push_back(v);
  }
  return row;
}

RunLogWriter::RunLogWriter(const std::string& path,
                           const std::map<std::string, std::string>& metadata, int num_conditions)
    : out_(path), num_conditions_(num_conditions) {
  if (!out_) throw InvalidInput(fmt::format("cannot write run log '{}'", path));
  out_ << kRunLogHeader << '\n';
  for (const auto& [k, v] : metadata) out_ << "# " << k << '=' << v << '\n';
  const auto cols = runlog_columns(num_conditions);
  for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
  out_ << '\n';
  out_.flush();
}

void RunLogWriter::append(const IterationRecord& record) {
  if (static_cast<int>(record.conditions.size()) != num_conditions_) {
    throw InvalidInput("run log: record has the wrong number of conditions");
  }
  const auto row = runlog_row(record);
  for (std::size_t i = 0; i < row.size(); ++i) out_ << (i ? "," : "") << fmt::format("{}", row[i]);
  out_ << '\n';
  out_.flush();
}

int RunLog::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  throw InvalidInput(fmt::format("run log has no column '{}'", name));
}

bool RunLog::value_at(int iteration, const std::string& name, double* value) const {
  const int it = column("iteration");
  const int c = column(name);
  for (const auto& row : rows) {
    if (static_cast<int>(row[it]) == iteration) {
      *value = row[c];
      return true;
    }
  }
  return false;
}

RunLog read_runlog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(fmt::format("cannot open run log '{}'", path));
  std::string line;
  if (!std::getline(in, line) || line != kRunLogHeader) {
    throw InvalidInput(fmt::format("run log '{}': unsupported version line '{}' (expected '{}')",
                                   path, line, kRunLogHeader));
  }
  RunLog log;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw InvalidInput("run log: malformed metadata line");
      log.metadata[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    log.columns = split(line);
    break;
  }
  if (log.columns.empty()) throw InvalidInput(fmt::format("run log '{}': missing header", path));
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != log.columns.size()) {
      throw InvalidInput(fmt::format("run log '{}': row {} has {} cells, expected {}", path,
                                     number, cells.size(), log.columns.size()));
    }
    std::vector<double> row;
    for (const auto& cell : cells) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw InvalidInput(fmt::format("run log '{}': bad number '{}' in row {}", path, cell, number));
      }
      row.push_back(v);
    }
    log.rows.push_back(std::move(row));
  }
  return log;
}

}  // namespace mdgps::harness
