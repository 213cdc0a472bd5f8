#pragma once

#include "bayesid/polychaos/pce.hpp"

#include <json.hpp>

namespace bayesid::pc {

// nlohmann::json writes doubles in shortest round-trip form, so to_json/from_json
// reproduce every coefficient bit for bit.

inline nlohmann::json to_json(const PceTensor& q) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < q.space_dim(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index a = 0; a < q.terms(); ++a) row.push_back(q.coeffs()(i, a));
    rows.push_back(std::move(row));
  }
  return {{"M", q.index_set().dims()},
          {"p", q.index_set().order()},
          {"ordering", "grlex"},
          {"coeffs", std::move(rows)}};
}

inline PceTensor pce_from_json(const nlohmann::json& j,
                               std::size_t max_size = kDefaultMaxIndexSetSize) {
  if (j.value("ordering", std::string{"grlex"}) != "grlex")
    throw InvalidArgument("PceTensor JSON: unsupported ordering");
  const int dims = j.at("M").get<int>();
  const int order = j.at("p").get<int>();
  auto set = std::make_shared<const MultiIndexSet>(build_total_degree_set(dims, order, max_size));
  const auto& rows = j.at("coeffs");
  Matrix c(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(set->size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != set->size())
      throw InvalidArgument("PceTensor JSON: row " + std::to_string(i) + " has wrong length");
    for (std::size_t a = 0; a < set->size(); ++a)
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = rows[i][a].get<double>();
  }
  return PceTensor(std::move(set), std::move(c));
}

}  // namespace bayesid::pc
