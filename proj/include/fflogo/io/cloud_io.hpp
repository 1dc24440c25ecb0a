#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fflogo/core/point_cloud.hpp"

namespace fflogo {

enum class CloudFormat { ply_ascii, pcd_ascii, xyz };

/// I/O failure with the offending file and (when known) line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, int line, const std::string& what)
      : std::runtime_error(path + (line > 0 ? ":" + std::to_string(line) : "") + ": " + what),
        path_(path),
        line_(line) {}
  const std::string& path() const { return path_; }
  int line() const { return line_; }

 private:
  std::string path_;
  int line_;
};

namespace detail {

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

inline double parse_double(const std::string& tok, const std::string& path, int line) {
  double v = 0.0;
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end)
    throw ParseError(path, line, "expected a number, got '" + tok + "'");
  if (!std::isfinite(v)) throw ParseError(path, line, "non-finite coordinate '" + tok + "'");
  return v;
}

// Renormalizes a raw normal; zero-length normals are flagged invalid.
inline void push_normal(PointCloud& cloud, const Eigen::Vector3d& n) {
  const double len = n.norm();
  if (len < 1e-12) {
    cloud.normals.push_back(Eigen::Vector3d::UnitZ());
    cloud.normal_valid.push_back(0);
  } else {
    cloud.normals.push_back(n / len);
    cloud.normal_valid.push_back(1);
  }
}

inline PointCloud load_xyz(std::istream& in, const std::string& path) {
  PointCloud cloud;
  std::string line;
  int lineno = 0;
  bool has_normals = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 3 && toks.size() != 6)
      throw ParseError(path, lineno, "expected 3 or 6 columns, got " + std::to_string(toks.size()));
    if (cloud.empty()) has_normals = (toks.size() == 6);
    if ((toks.size() == 6) != has_normals)
      throw ParseError(path, lineno, "inconsistent column count");
    cloud.points.emplace_back(parse_double(toks[0], path, lineno),
                              parse_double(toks[1], path, lineno),
                              parse_double(toks[2], path, lineno));
    if (has_normals)
      push_normal(cloud, {parse_double(toks[3], path, lineno),
                          parse_double(toks[4], path, lineno),
                          parse_double(toks[5], path, lineno)});
  }
  return cloud;
}

inline PointCloud load_ply_ascii(std::istream& in, const std::string& path) {
  std::string line;
  int lineno = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) throw ParseError(path, lineno, "unexpected end of file");
    ++lineno;
  };

  next_line();
  if (line != "ply") throw ParseError(path, lineno, "missing 'ply' magic");

  long vertex_count = -1;
  std::vector<std::string> vertex_props;
  bool format_seen = false;
  std::string current_element;
  while (true) {
    next_line();
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks[0] == "comment") continue;
    if (toks[0] == "format") {
      if (toks.size() < 2 || toks[1] != "ascii")
        throw ParseError(path, lineno, "only ascii PLY is supported");
      format_seen = true;
    } else if (toks[0] == "element") {
      if (toks.size() != 3) throw ParseError(path, lineno, "malformed element line");
      current_element = toks[1];
      if (current_element == "vertex") vertex_count = std::stol(toks[2]);
    } else if (toks[0] == "property") {
      if (current_element == "vertex") {
        if (toks.size() < 3) throw ParseError(path, lineno, "malformed property line");
        vertex_props.push_back(toks.back());
      }
    } else if (toks[0] == "end_header") {
      break;
    } else {
      throw ParseError(path, lineno, "unrecognized header line '" + toks[0] + "'");
    }
  }
  if (!format_seen) throw ParseError(path, lineno, "missing format line");
  if (vertex_count < 0) throw ParseError(path, lineno, "missing 'element vertex'");

  auto prop_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < vertex_props.size(); ++i)
      if (vertex_props[i] == name) return static_cast<int>(i);
    return -1;
  };
  const int ix = prop_index("x"), iy = prop_index("y"), iz = prop_index("z");
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError(path, lineno, "vertex element lacks x/y/z");
  const int inx = prop_index("nx"), iny = prop_index("ny"), inz = prop_index("nz");
  const bool has_normals = inx >= 0 && iny >= 0 && inz >= 0;

  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  for (long v = 0; v < vertex_count; ++v) {
    next_line();
    const auto toks = split_ws(line);
    if (toks.size() != vertex_props.size())
      throw ParseError(path, lineno,
                       "expected " + std::to_string(vertex_props.size()) + " values, got " +
                           std::to_string(toks.size()));
    cloud.points.emplace_back(parse_double(toks[ix], path, lineno),
                              parse_double(toks[iy], path, lineno),
                              parse_double(toks[iz], path, lineno));
    if (has_normals)
      push_normal(cloud, {parse_double(toks[inx], path, lineno),
                          parse_double(toks[iny], path, lineno),
                          parse_double(toks[inz], path, lineno)});
  }
  return cloud;
}

inline PointCloud load_pcd_ascii(std::istream& in, const std::string& path) {
  std::string line;
  int lineno = 0;
  std::vector<std::string> fields;
  long point_count = -1;
  bool data_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks[0] == "FIELDS") {
      fields.assign(toks.begin() + 1, toks.end());
    } else if (toks[0] == "POINTS") {
      if (toks.size() != 2) throw ParseError(path, lineno, "malformed POINTS line");
      point_count = std::stol(toks[1]);
    } else if (toks[0] == "DATA") {
      if (toks.size() != 2 || toks[1] != "ascii")
        throw ParseError(path, lineno, "only 'DATA ascii' is supported");
      data_seen = true;
      break;
    }
    // VERSION/SIZE/TYPE/COUNT/WIDTH/HEIGHT/VIEWPOINT are accepted and ignored.
  }
  if (!data_seen) throw ParseError(path, lineno, "missing DATA line");
  if (point_count < 0) throw ParseError(path, lineno, "missing POINTS line");

  auto field_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < fields.size(); ++i)
      if (fields[i] == name) return static_cast<int>(i);
    return -1;
  };
  const int ix = field_index("x"), iy = field_index("y"), iz = field_index("z");
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError(path, lineno, "FIELDS lack x/y/z");
  const int inx = field_index("normal_x"), iny = field_index("normal_y"),
            inz = field_index("normal_z");
  const bool has_normals = inx >= 0 && iny >= 0 && inz >= 0;

  PointCloud cloud;
  cloud.points.reserve(point_count);
  for (long v = 0; v < point_count; ++v) {
    if (!std::getline(in, line)) throw ParseError(path, lineno, "unexpected end of file");
    ++lineno;
    const auto toks = split_ws(line);
    if (toks.size() != fields.size())
      throw ParseError(path, lineno,
                       "expected " + std::to_string(fields.size()) + " values, got " +
                           std::to_string(toks.size()));
    cloud.points.emplace_back(parse_double(toks[ix], path, lineno),
                              parse_double(toks[iy], path, lineno),
                              parse_double(toks[iz], path, lineno));
    if (has_normals)
      push_normal(cloud, {parse_double(toks[inx], path, lineno),
                          parse_double(toks[iny], path, lineno),
                          parse_double(toks[inz], path, lineno)});
  }
  return cloud;
}

}  // namespace detail

inline PointCloud load_cloud(const std::string& path, CloudFormat format) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  PointCloud cloud;
  switch (format) {
    case CloudFormat::ply_ascii: cloud = detail::load_ply_ascii(in, path); break;
    case CloudFormat::pcd_ascii: cloud = detail::load_pcd_ascii(in, path); break;
    case CloudFormat::xyz: cloud = detail::load_xyz(in, path); break;
  }
  if (cloud.empty()) throw ParseError(path, 0, "empty cloud");
  cloud.validate();
  return cloud;
}

/// Picks the format from the file extension (.ply/.pcd/.xyz or .txt).
inline PointCloud load_cloud(const std::string& path) {
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "ply") return load_cloud(path, CloudFormat::ply_ascii);
  if (ext == "pcd") return load_cloud(path, CloudFormat::pcd_ascii);
  if (ext == "xyz" || ext == "txt") return load_cloud(path, CloudFormat::xyz);
  throw ParseError(path, 0, "cannot infer format from extension '" + ext + "'");
}

inline void save_cloud(const std::string& path, const PointCloud& cloud, CloudFormat format) {
  std::ofstream out(path);
  if (!out) throw ParseError(path, 0, "cannot open file for writing");
  out.precision(17);
  const bool n = cloud.has_normals();
  switch (format) {
    case CloudFormat::ply_ascii: {
      out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
          << "property double x\nproperty double y\nproperty double z\n";
      if (n)
        out << "property double nx\nproperty double ny\nproperty double nz\n";
      out << "end_header\n";
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.points[i];
        out << p.x() << " " << p.y() << " " << p.z();
        if (n) out << " " << cloud.normals[i].x() << " " << cloud.normals[i].y() << " "
                   << cloud.normals[i].z();
        out << "\n";
      }
      break;
    }
    case CloudFormat::pcd_ascii: {
      out << "VERSION 0.7\nFIELDS x y z" << (n ? " normal_x normal_y normal_z" : "") << "\n"
          << "SIZE 8 8 8" << (n ? " 8 8 8" : "") << "\nTYPE F F F" << (n ? " F F F" : "") << "\n"
          << "COUNT 1 1 1" << (n ? " 1 1 1" : "") << "\nWIDTH " << cloud.size()
          << "\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS " << cloud.size() << "\nDATA ascii\n";
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.points[i];
        out << p.x() << " " << p.y() << " " << p.z();
        if (n) out << " " << cloud.normals[i].x() << " " << cloud.normals[i].y() << " "
                   << cloud.normals[i].z();
        out << "\n";
      }
      break;
    }
    case CloudFormat::xyz: {
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.points[i];
        out << p.x() << " " << p.y() << " " << p.z();
        if (n) out << " " << cloud.normals[i].x() << " " << cloud.normals[i].y() << " "
                   << cloud.normals[i].z();
        out << "\n";
      }
      break;
    }
  }
  if (!out) throw ParseError(path, 0, "write failure");
}

inline void save_cloud(const std::string& path, const PointCloud& cloud) {
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "ply") return save_cloud(path, cloud, CloudFormat::ply_ascii);
  if (ext == "pcd") return save_cloud(path, cloud, CloudFormat::pcd_ascii);
  if (ext == "xyz" || ext == "txt") return save_cloud(path, cloud, CloudFormat::xyz);
  throw ParseError(path, 0, "cannot infer format from extension '" + ext + "'");
}

}  // namespace fflogo
