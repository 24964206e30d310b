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


#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "mdgps/mdgps.hpp"

namespace mdgps::harness {

/// First line of every run log; bumped whenever the columns change.
inline constexpr const char* kRunLogHeader = "# mdgps-runlog v1";

/// Column names for a run with n conditions: iteration, eps_i/eta_i/kl_i per
/// condition, the six cost estimates averaged over conditions, returns,
/// success rate, bound summary and wall time (always last).
std::vector<std::string> runlog_columns(int num_conditions);

/// Values of one record in runlog_columns order.
std::vector<double> runlog_row(const IterationRecord& record);

/// Appends rows to a comma-separated run log. The file starts with the
/// version line, then `# key=value` metadata lines, then the column header.
class RunLogWriter {
 public:
  RunLogWriter(const std::string& path, const std::map<std::string, std::string>& metadata,
               int num_conditions);
  void append(const IterationRecord& record);

 private:
  std::ofstream out_;
  int num_conditions_;
};

struct RunLog {
  std::map<std::string, std::string> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Index of a column; throws InvalidInput if absent.
  int column(const std::string& name) const;
  /// Value at the row whose iteration column equals `iteration`, if any.
  bool value_at(int iteration, const std::string& name, double* value) const;
};

/// Throws InvalidInput for a missing file, an unknown version line or a
/// malformed row.
RunLog read_runlog(const std::string& path);

}  // namespace mdgps::harness
