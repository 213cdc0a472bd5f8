#pragma once

#include "bayesid/forward/propagate.hpp"
#include "bayesid/polychaos/pce_json.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace bayesid::fwd {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = r == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows[0].size());
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != c) throw InvalidArgument("ragged matrix in JSON");
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

inline nlohmann::json to_json(const Ensemble& e) {
  return {{"seed", e.seed}, {"samples", matrix_to_json(e.samples)}, {"thetas", matrix_to_json(e.thetas)}};
}

inline Ensemble ensemble_from_json(const nlohmann::json& j) {
  Ensemble e;
  e.seed = j.at("seed").get<std::uint64_t>();
  e.samples = matrix_from_json(j.at("samples"));
  e.thetas = matrix_from_json(j.at("thetas"));
  require(e.samples.cols() == e.thetas.cols(), "ensemble JSON: samples and thetas differ in size");
  return e;
}

/// q and y_f representations plus provenance, in one JSON container.
struct ForecastBundle {
  std::string config_hash;
  std::map<std::string, std::uint64_t> seeds;
  std::optional<PceForecast> pce;
  std::optional<SampledForecast> ensemble;
};

inline nlohmann::json to_json(const ForecastBundle& b) {
  require(b.pce.has_value() != b.ensemble.has_value(), "forecast bundle holds exactly one representation");
  nlohmann::json j{{"config_hash", b.config_hash}, {"seeds", b.seeds}};
  if (b.pce) {
    j["representation"] = "pce";
    j["q"] = pc::to_json(b.pce->q);
    j["u"] = pc::to_json(b.pce->u);
    j["y"] = pc::to_json(b.pce->y);
  } else {
    j["representation"] = "ensemble";
    j["q"] = to_json(b.ensemble->q);
    j["u"] = to_json(b.ensemble->u);
    j["y"] = to_json(b.ensemble->y);
  }
  return j;
}

inline ForecastBundle bundle_from_json(const nlohmann::json& j) {
  ForecastBundle b;
  b.config_hash = j.at("config_hash").get<std::string>();
  b.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
  const auto kind = j.at("representation").get<std::string>();
  if (kind == "pce") {
    PceForecast f;
    f.q = pc::pce_from_json(j.at("q"));
    f.u = pc::PceTensor(f.q.index_set_ptr(), pc::pce_from_json(j.at("u")).coeffs());
    f.y = pc::PceTensor(f.q.index_set_ptr(), pc::pce_from_json(j.at("y")).coeffs());
    b.pce = std::move(f);
  } else if (kind == "ensemble") {
    b.ensemble = SampledForecast{ensemble_from_json(j.at("q")), ensemble_from_json(j.at("u")),
                                 ensemble_from_json(j.at("y"))};
  } else {
    throw InvalidArgument("forecast bundle: unknown representation '" + kind + "'");
  }
  return b;
}

}  // namespace bayesid::fwd
