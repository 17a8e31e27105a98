#include "splatfit/ply.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace splatfit {
namespace {

constexpr std::array<const char*, 14> kProps = {
    "x",     "y",       "z",     "scale_0", "scale_1", "scale_2", "rot_0",
    "rot_1", "rot_2",   "rot_3", "opacity", "r",       "g",       "b"};

std::array<Real, 14> pack(const Gaussian3D& g) {
  return {g.mean.x,    g.mean.y,    g.mean.z,    g.scale.x,  g.scale.y,
          g.scale.z,   g.rotation.w, g.rotation.x, g.rotation.y, g.rotation.z,
          g.opacity,   g.color.x,   g.color.y,   g.color.z};
}

Gaussian3D unpack(const std::array<Real, 14>& v) {
  Gaussian3D g;
  g.mean = {v[0], v[1], v[2]};
  g.scale = {v[3], v[4], v[5]};
  g.rotation = {v[6], v[7], v[8], v[9]};
  g.opacity = v[10];
  g.color = {v[11], v[12], v[13]};
  return g;
}

[[noreturn]] void parse_error(const std::filesystem::path& path, int line,
                              const std::string& detail) {
  std::ostringstream msg;
  msg << "malformed PLY " << path.string() << " (line " << line
      << "): " << detail;
  throw std::runtime_error(msg.str());
}

}  // namespace

void ply_write(const GaussianSet& set, const std::filesystem::path& path,
               PlyFormat format) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open PLY for writing: " + path.string());

  f << "ply\nformat "
    << (format == PlyFormat::kAscii ? "ascii" : "binary_little_endian")
    << " 1.0\n";
  f << "element vertex " << set.size() << "\n";
  for (const char* p : kProps) f << "property double " << p << "\n";
  f << "end_header\n";

  if (format == PlyFormat::kAscii) {
    char buf[32];
    for (const Gaussian3D& g : set.gaussians) {
      const auto v = pack(g);
      for (size_t i = 0; i < v.size(); ++i) {
        // 17 significant digits round-trip doubles exactly.
        std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
        f << buf << (i + 1 < v.size() ? ' ' : '\n');
      }
    }
  } else {
    for (const Gaussian3D& g : set.gaussians) {
      const auto v = pack(g);
      f.write(reinterpret_cast<const char*>(v.data()), sizeof(v));
    }
  }
}

GaussianSet ply_read(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open PLY for reading: " + path.string());

  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(f, line)) parse_error(path, line_no, "unexpected end of header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
    return line;
  };

  if (next_line() != "ply") parse_error(path, line_no, "missing 'ply' magic");
  bool ascii = false;
  {
    std::istringstream ss(next_line());
    std::string kw, fmt, ver;
    ss >> kw >> fmt >> ver;
    if (kw != "format") parse_error(path, line_no, "expected 'format'");
    if (fmt == "ascii")
      ascii = true;
    else if (fmt == "binary_little_endian")
      ascii = false;
    else
      parse_error(path, line_no, "unsupported format '" + fmt + "'");
  }

  size_t count = 0;
  std::vector<std::string> names;
  std::vector<bool> is_double;
  while (true) {
    std::istringstream ss(next_line());
    std::string kw;
    ss >> kw;
    if (kw == "comment") continue;
    if (kw == "element") {
      std::string name;
      ss >> name >> count;
      if (name != "vertex")
        parse_error(path, line_no, "only 'vertex' elements are supported");
    } else if (kw == "property") {
      std::string type, name;
      ss >> type >> name;
      if (type == "list")
        parse_error(path, line_no, "list properties are not supported");
      if (type != "double" && type != "float" && type != "float64" &&
          type != "float32")
        parse_error(path, line_no, "unsupported property type '" + type + "'");
      names.push_back(name);
      is_double.push_back(type == "double" || type == "float64");
    } else if (kw == "end_header") {
      break;
    } else {
      parse_error(path, line_no, "unknown header keyword '" + kw + "'");
    }
  }

  // Map file columns onto the 14 expected fields.
  std::array<int, 14> col{};
  col.fill(-1);
  for (size_t c = 0; c < names.size(); ++c)
    for (size_t k = 0; k < kProps.size(); ++k)
      if (names[c] == kProps[k]) col[k] = static_cast<int>(c);
  for (size_t k = 0; k < col.size(); ++k)
    if (col[k] < 0)
      parse_error(path, line_no,
                  std::string("missing property '") + kProps[k] + "'");

  GaussianSet set;
  set.gaussians.reserve(count);
  std::vector<Real> row(names.size());
  for (size_t i = 0; i < count; ++i) {
    if (ascii) {
      std::istringstream ss(next_line());
      for (size_t c = 0; c < row.size(); ++c)
        if (!(ss >> row[c]))
          parse_error(path, line_no, "short vertex row");
    } else {
      for (size_t c = 0; c < row.size(); ++c) {
        if (is_double[c]) {
          double v;
          f.read(reinterpret_cast<char*>(&v), sizeof(v));
          row[c] = v;
        } else {
          float v;
          f.read(reinterpret_cast<char*>(&v), sizeof(v));
          row[c] = v;
        }
        if (!f)
          parse_error(path, line_no, "truncated binary vertex data");
      }
    }
    std::array<Real, 14> vals;
    for (size_t k = 0; k < vals.size(); ++k) vals[k] = row[col[k]];
    set.gaussians.push_back(unpack(vals));
  }
  return set;
}

}  // namespace splatfit
