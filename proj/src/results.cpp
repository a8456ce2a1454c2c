#include "dgr/results.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#ifndef DGR_BUILD_ID
#define DGR_BUILD_ID "unknown"
#endif

namespace dgr {

std::string build_id() { return DGR_BUILD_ID; }

namespace {

nlohmann::json matrix_to_json(const MatrixD& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < m.cols(); ++j) {
      if (std::isnan(m(i, j)))
        row.push_back(nullptr);
      else
        row.push_back(m(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixD matrix_from_json(const nlohmann::json& j) {
  const Index rows = Index(j.size());
  const Index cols = rows == 0 ? 0 : Index(j.at(0).size());
  MatrixD m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = j.at(size_t(i));
    if (Index(row.size()) != cols) throw Error("result file: ragged accuracy matrix");
    for (Index c = 0; c < cols; ++c) {
      const auto& cell = row.at(size_t(c));
      m(i, c) = cell.is_null() ? std::numeric_limits<double>::quiet_NaN()
                               : cell.get<double>();
    }
  }
  return m;
}

}  // namespace

nlohmann::json to_json(const RunResult& r) {
  nlohmann::json j;
  j["schema_version"] = r.schema_version;
  j["build"] = r.build;
  j["benchmark"] = r.benchmark;
  j["strategy"] = r.strategy;
  j["variant"] = r.variant;
  j["seed"] = r.seed;
  j["config"] = r.config_echo;
  j["accuracy"]["per_task"] = matrix_to_json(r.acc.entries);
  j["accuracy"]["average_after"] =
      std::vector<double>(r.acc.avg_after.data(), r.acc.avg_after.data() + r.acc.avg_after.size());
  j["average_final"] = r.average_final;
  if (std::isnan(r.fid))
    j["fid"] = nullptr;
  else
    j["fid"] = r.fid;
  j["wall_seconds"] = r.wall_seconds;
  j["files"] = {{"train_log", r.train_log},
                {"checkpoint", r.checkpoint},
                {"replay_grid", r.replay_grid}};
  return j;
}

RunResult run_result_from_json(const nlohmann::json& j) {
  RunResult r;
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != 1)
    throw Error("result file: unsupported schema_version " +
                std::to_string(r.schema_version));
  r.build = j.at("build").get<std::string>();
  r.benchmark = j.at("benchmark").get<std::string>();
  r.strategy = j.at("strategy").get<std::string>();
  r.variant = j.at("variant").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config_echo = j.at("config");
  r.acc.entries = matrix_from_json(j.at("accuracy").at("per_task"));
  auto avg = j.at("accuracy").at("average_after").get<std::vector<double>>();
  r.acc.avg_after = Eigen::Map<const VectorD>(avg.data(), Index(avg.size()));
  r.average_final = j.at("average_final").get<double>();
  const auto& fid = j.at("fid");
  r.fid = fid.is_null() ? std::numeric_limits<double>::quiet_NaN() : fid.get<double>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.train_log = j.at("files").at("train_log").get<std::string>();
  r.checkpoint = j.at("files").at("checkpoint").get<std::string>();
  r.replay_grid = j.at("files").at("replay_grid").get<std::string>();
  return r;
}

void save_run_result(const std::filesystem::path& path, const RunResult& r) {
  std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << to_json(r).dump(2) << "\n";
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

RunResult load_run_result(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open result file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed result file " + path.string() + ": " + e.what());
  }
  try {
    return run_result_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error("result file " + path.string() + " missing fields: " + e.what());
  }
}

std::vector<std::filesystem::path> find_result_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().filename() == "result.json")
      out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace dgr
