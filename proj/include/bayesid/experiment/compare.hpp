#pragma once

#include "bayesid/csv.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>

namespace bayesid::experiment {

inline constexpr const char* kGapMarker = "gap";

struct RunTable {
  std::string experiment;
  std::string method;
  std::string config_hash;
  std::map<int, std::array<std::string, 3>> steps;  // step -> eps_m, eps_bar, var_point
};

inline RunTable load_run_table(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path))
    throw InvalidArgument("compare: " + dir.string() + " has no manifest.json");
  const auto manifest = nlohmann::json::parse(read_text(manifest_path.string()));
  RunTable r;
  r.experiment = manifest.at("experiment").get<std::string>();
  r.method = manifest.at("method").get<std::string>();
  r.config_hash = manifest.at("config_hash").get<std::string>();
  const auto csv_path = dir / "sequential-errors.csv";
  if (!std::filesystem::exists(csv_path))
    throw InvalidArgument("compare: " + dir.string() + " has no sequential-errors.csv (method " + r.method + ")");
  const auto t = parse_csv(read_text(csv_path.string()));
  const auto step = t.column("step"), em = t.column("eps_m"), eb = t.column("eps_bar"), var = t.column("var_point");
  for (const auto& row : t.rows) r.steps[std::stoi(row[step])] = {row[em], row[eb], row[var]};
  return r;
}

/// Side-by-side error table of two runs of one experiment family, one row per update
/// step present in either run. A step missing from one run is filled with the gap
/// marker; differences (b - a) are given where both exist.
inline CsvTable compare_runs(const std::filesystem::path& dir_a, const std::filesystem::path& dir_b) {
  const auto a = load_run_table(dir_a);
  const auto b = load_run_table(dir_b);
  if (a.experiment != b.experiment)
    throw InvalidArgument("compare: experiment families differ (" + a.experiment + " vs " + b.experiment + ")");
  const std::string la = a.method != b.method ? a.method : "a";
  const std::string lb = a.method != b.method ? b.method : "b";
  CsvTable t;
  t.header = {"step"};
  for (const auto& l : {la, lb})
    for (const char* c : {"_eps_m", "_eps_bar", "_var"}) t.header.push_back(l + c);
  for (const char* c : {"diff_eps_m", "diff_eps_bar", "diff_var"}) t.header.push_back(c);

  std::set<int> steps;
  for (const auto& [k, v] : a.steps)
    if (k > 0) steps.insert(k);
  for (const auto& [k, v] : b.steps)
    if (k > 0) steps.insert(k);
  for (int k : steps) {
    std::vector<std::string> row{std::to_string(k)};
    const auto ia = a.steps.find(k), ib = b.steps.find(k);
    for (const auto* side : {&a, &b}) {
      const auto it = side->steps.find(k);
      for (int j = 0; j < 3; ++j) row.push_back(it != side->steps.end() ? it->second[j] : kGapMarker);
    }
    for (int j = 0; j < 3; ++j) {
      if (ia == a.steps.end() || ib == b.steps.end())
        row.push_back(kGapMarker);
      else
        row.push_back(format_double(parse_double(ib->second[j]) - parse_double(ia->second[j])));
    }
    t.add(std::move(row));
  }
  return t;
}

}  // namespace bayesid::experiment
