#pragma once

// Pieces of the command-line surface that are worth testing without a process:
// exit codes, output-root resolution, the risks-file reader and error JSON.

#include "motcat/bagdata.hpp"
#include "motcat/core.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace motcat::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  exit_ok = 0,
  exit_other = 1,
  exit_parse = 2,
  exit_data = 3,
  exit_solver = 4,
  exit_numeric = 5,
  exit_io = 6,
};

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::parameter:
    case ErrorKind::format:
    case ErrorKind::shape: return exit_parse;
    case ErrorKind::data:
    case ErrorKind::metric: return exit_data;
    case ErrorKind::solver:
    case ErrorKind::constraint: return exit_solver;
    case ErrorKind::numeric:
    case ErrorKind::domain: return exit_numeric;
    case ErrorKind::io: return exit_io;
    case ErrorKind::state: return exit_other;
  }
  return exit_other;
}

inline constexpr const char* kOutputRootEnv = "MOTCAT_OUTPUT_ROOT";

// Relative output paths are placed under $MOTCAT_OUTPUT_ROOT when it is set.
inline fs::path resolve_output(const fs::path& p) {
  if (p.is_absolute()) return p;
  const char* root = std::getenv(kOutputRootEnv);
  if (root == nullptr || *root == '\0') return p;
  return fs::path(root) / p;
}

inline std::string error_json(const std::string& kind, const std::string& message) {
  return nlohmann::json{{"error", kind}, {"message", message}}.dump();
}

// Reads `case_id` and `risk` columns from a CSV with a header row; other
// columns are ignored.
inline std::map<std::string, double> read_risks(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("risks file '" + path.string() + "' does not exist");
  std::istringstream in(detail::read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);
  int id_col = -1, risk_col = -1;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == "case_id") id_col = static_cast<int>(k);
    if (header[k] == "risk") risk_col = static_cast<int>(k);
  }
  if (id_col < 0 || risk_col < 0) throw FormatError(path.string() + ": header needs 'case_id' and 'risk' columns");
  std::map<std::string, double> out;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto toks = detail::split_csv_line(line);
    if (toks.size() != header.size())
      throw FormatError(path.string() + ": row " + std::to_string(row) + " has " + std::to_string(toks.size()) +
                        " fields, expected " + std::to_string(header.size()));
    const std::string id(toks[static_cast<std::size_t>(id_col)]);
    if (!out.emplace(id, detail::parse_double(toks[static_cast<std::size_t>(risk_col)], path.string())).second)
      throw DataError(path.string() + ": duplicate case_id '" + id + "'");
  }
  return out;
}

// Aligns risks with manifest order; every manifest case must have a risk.
inline std::vector<double> align_risks(const std::map<std::string, double>& risks, const CaseManifest& manifest) {
  std::vector<double> out;
  std::vector<std::string> missing;
  for (const auto& c : manifest.cases) {
    auto it = risks.find(c.case_id);
    if (it == risks.end()) missing.push_back(c.case_id);
    else out.push_back(it->second);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t k = 0; k < missing.size() && k < 10; ++k) list += (k ? ", " : "") + missing[k];
    if (missing.size() > 10) list += ", ...";
    throw DataError(std::to_string(missing.size()) + " manifest case(s) missing from risks file: " + list);
  }
  return out;
}

}  // namespace motcat::cli
