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


#include "mdgps/harness/checkpoint.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

#include "mdgps/errors.hpp"

namespace mdgps::harness {

using nlohmann::json;

namespace {

json vec_to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec vec_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& cp) {
  const GlobalPolicy& p = cp.policy;
  json cov = json::array();
  for (Eigen::Index r = 0; r < p.cov().rows(); ++r) cov.push_back(vec_to_json(p.cov().row(r).transpose()));
  json doc = {
      {"format_version", kCheckpointFormatVersion},
      {"env", cp.env},
      {"iteration", cp.iteration},
      {"architecture",
       {{"type", p.architecture() == Architecture::kAffine ? "affine" : "mlp"},
        {"state_dim", p.state_dim()},
        {"action_dim", p.action_dim()},
        {"hidden", p.hidden_sizes()},
        {"selector", p.selector()}}},
      {"params", vec_to_json(p.params())},
      {"cov", cov},
      {"normalization",
       {{"shift", vec_to_json(p.normalization().shift)},
        {"scale", vec_to_json(p.normalization().scale)}}},
  };
  return doc.dump(1);
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInput(fmt::format("checkpoint: not valid JSON ({})", e.what()));
  }
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw InvalidInput(fmt::format("checkpoint format version {} is not supported (expected {})",
                                     version, kCheckpointFormatVersion));
    }
    const json& arch = doc.at("architecture");
    const std::string type = arch.at("type").get<std::string>();
    if (type != "affine" && type != "mlp") {
      throw InvalidInput(fmt::format("checkpoint: unknown architecture '{}'", type));
    }
    const auto& rows = doc.at("cov");
    const auto n = static_cast<Eigen::Index>(rows.size());
    Mat cov(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const Vec row = vec_from_json(rows.at(r));
      if (row.size() != n) throw InvalidInput("checkpoint: covariance is not square");
      cov.row(r) = row.transpose();
    }
    Checkpoint cp;
    cp.env = doc.at("env").get<std::string>();
    cp.iteration = doc.at("iteration").get<int>();
    cp.policy = GlobalPolicy::from_parts(
        type == "affine" ? Architecture::kAffine : Architecture::kMlp,
        arch.at("state_dim").get<int>(), arch.at("action_dim").get<int>(),
        arch.at("selector").get<std::vector<int>>(), arch.at("hidden").get<std::vector<int>>(),
        vec_from_json(doc.at("params")), cov,
        InputNormalization{vec_from_json(doc.at("normalization").at("shift")),
                           vec_from_json(doc.at("normalization").at("scale"))});
    return cp;
  } catch (const json::exception& e) {
    throw InvalidInput(fmt::format("checkpoint: malformed document ({})", e.what()));
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::ofstream out(path);
  if (!out) throw InvalidInput(fmt::format("cannot write checkpoint '{}'", path));
  out << checkpoint_to_json(checkpoint) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(fmt::format("cannot open checkpoint '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace mdgps::harness
