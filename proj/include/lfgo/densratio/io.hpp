#pragma once

// JSON serialization of fitted ratio models.

#include <string>

#include <json.hpp>

#include "lfgo/densratio/kernel.hpp"

namespace lfgo::densratio {

namespace detail {

inline nlohmann::json to_json_vector(const Vector& v) { return std::vector<double>(v.begin(), v.end()); }

inline Vector from_json_vector(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

inline nlohmann::json to_json(const RatioModel& m) {
  nlohmann::json centers = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.basis.centers.rows(); ++i)
    centers.push_back(detail::to_json_vector(m.basis.centers.row(i).transpose()));
  return {
      {"kind", "kernel_density_ratio"},
      {"kernel", "gaussian"},
      {"dim", m.basis.centers.cols()},
      {"centers", centers},
      {"weights", detail::to_json_vector(m.weights)},
      {"sigma", m.basis.sigma},
      {"lambda", m.lambda},
      {"alpha", m.alpha},
      {"scale", {{"offset", detail::to_json_vector(m.input_scale.offset)},
                 {"scale", detail::to_json_vector(m.input_scale.scale)}}},
  };
}

inline RatioModel ratio_model_from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "kernel_density_ratio") throw DomainError("not a serialized ratio model");
  RatioModel m;
  const auto& c = j.at("centers");
  const auto dim = j.at("dim").get<Eigen::Index>();
  m.basis.centers.resize(static_cast<Eigen::Index>(c.size()), dim);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vector row = detail::from_json_vector(c[i]);
    if (row.size() != dim) throw DomainError("center dimension mismatch");
    m.basis.centers.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  m.basis.sigma = j.at("sigma").get<double>();
  m.weights = detail::from_json_vector(j.at("weights"));
  m.lambda = j.at("lambda").get<double>();
  m.alpha = j.at("alpha").get<double>();
  m.input_scale.offset = detail::from_json_vector(j.at("scale").at("offset"));
  m.input_scale.scale = detail::from_json_vector(j.at("scale").at("scale"));
  if (m.weights.size() != m.basis.centers.rows()) throw DomainError("weight count does not match centers");
  return m;
}

}  // namespace lfgo::densratio
