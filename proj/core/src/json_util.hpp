#pragma once

#include "easimix/dimensions.hpp"
#include "easimix/types.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace easimix::detail {

using json = nlohmann::ordered_json;

inline json to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

// Matrices are arrays of rows.
inline json to_json(const Mat& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

inline Vec vec_from(const json& j, const std::string& what) {
  if (!j.is_array()) throw DataError(what + ": expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw DataError(what + ": expected numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline Mat mat_from(const json& j, const std::string& what, Eigen::Index cols_if_empty = 0) {
  if (!j.is_array()) throw DataError(what + ": expected an array of rows");
  if (j.empty()) return Mat(0, cols_if_empty);
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) throw DataError(what + ": expected an array of rows");
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vec row = vec_from(j[r], what);
    if (row.size() != cols) throw DataError(what + ": ragged rows");
    m.row(r) = row.transpose();
  }
  return m;
}

inline json to_json(const Dimensions& d) {
  return json{{"goods", d.goods},
              {"degree", d.degree},
              {"demographics", d.demographics},
              {"price_covariates", d.price_covariates},
              {"utility_covariates", d.utility_covariates},
              {"instruments", d.instruments},
              {"clusters", d.clusters},
              {"symmetric", d.symmetric}};
}

inline Dimensions dims_from(const json& j) {
  Dimensions d;
  d.goods = j.at("goods").get<int>();
  d.degree = j.value("degree", 1);
  d.demographics = j.value("demographics", 0);
  d.price_covariates = j.value("price_covariates", 0);
  d.utility_covariates = j.value("utility_covariates", 0);
  d.instruments = j.value("instruments", 0);
  d.clusters = j.value("clusters", 1);
  d.symmetric = j.value("symmetric", true);
  d.validate();
  return d;
}

}  // namespace easimix::detail
