#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "fflogo/core/transform.hpp"

namespace fflogo {

/// 4x4 homogeneous matrix as nested row-major JSON arrays.
inline nlohmann::json transform_to_json(const RigidTransform& T) {
  const Eigen::Matrix4d m = T.matrix();
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < 4; ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline RigidTransform transform_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4)
    throw std::invalid_argument("transform JSON must be a 4x4 array");
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r) {
    if (!j[r].is_array() || j[r].size() != 4)
      throw std::invalid_argument("transform JSON must be a 4x4 array");
    for (int c = 0; c < 4; ++c) m(r, c) = j[r][c].get<double>();
  }
  return RigidTransform::from_matrix(m);
}

/// Plain-text form: four lines of four numbers, row-major.
inline std::string transform_to_text(const RigidTransform& T) {
  const Eigen::Matrix4d m = T.matrix();
  std::ostringstream out;
  out.precision(17);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) out << m(r, c) << (c == 3 ? "" : " ");
    out << "\n";
  }
  return out.str();
}

inline RigidTransform transform_from_text(std::istream& in) {
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if (!(in >> m(r, c))) throw std::invalid_argument("transform text: expected 16 numbers");
  return RigidTransform::from_matrix(m);
}

inline void save_transform_text(const std::string& path, const RigidTransform& T) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << transform_to_text(T);
}

inline RigidTransform load_transform_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  return transform_from_text(in);
}

}  // namespace fflogo
