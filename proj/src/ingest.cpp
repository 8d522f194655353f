#include "emtr/ingest.hpp"

#include "emtr/error.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace emtr::ingest {

namespace {

using geom::Point3;
using geom::PointCloud;
using geom::RigidTransform;
using geom::Vector3;

[[noreturn]] void parse_error(const std::string& msg) { throw Error(ErrorCode::Parse, msg); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool parse_double(std::string_view token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Normals that are present but not unit get renormalized; a zero normal
// anywhere drops the normals of the whole cloud.
void finish_normals(PointCloud& cloud) {
  for (auto& n : cloud.normals) {
    const double len = n.norm();
    if (!(len > 0.0) || !std::isfinite(len)) {
      cloud.normals.clear();
      return;
    }
    n /= len;
  }
}

// --- PLY -------------------------------------------------------------------

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
  }
  return 0;
}

bool parse_type(std::string_view name, PlyType& out) {
  static const std::array<std::pair<std::string_view, PlyType>, 16> table{{
      {"char", PlyType::Int8},     {"int8", PlyType::Int8},
      {"uchar", PlyType::UInt8},   {"uint8", PlyType::UInt8},
      {"short", PlyType::Int16},   {"int16", PlyType::Int16},
      {"ushort", PlyType::UInt16}, {"uint16", PlyType::UInt16},
      {"int", PlyType::Int32},     {"int32", PlyType::Int32},
      {"uint", PlyType::UInt32},   {"uint32", PlyType::UInt32},
      {"float", PlyType::Float32}, {"float32", PlyType::Float32},
      {"double", PlyType::Float64}, {"float64", PlyType::Float64},
  }};
  for (const auto& [key, value] : table) {
    if (key == name) {
      out = value;
      return true;
    }
  }
  return false;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::Float32;
  bool is_list = false;
  PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
  std::size_t header_line = 0;  // where the element was declared
};

struct PlyHeader {
  bool binary = false;
  std::vector<PlyElement> elements;
  std::size_t data_offset = 0;
};

PlyHeader parse_ply_header(const std::string& data) {
  PlyHeader header;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool saw_format = false;
  auto next_line = [&](std::string_view& line) {
    if (pos >= data.size()) return false;
    std::size_t eol = data.find('\n', pos);
    if (eol == std::string::npos) eol = data.size();
    line = std::string_view(data).substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    ++line_no;
    return true;
  };
  auto where = [&] { return " (header line " + std::to_string(line_no) + ")"; };

  std::string_view line;
  if (!next_line(line) || line != "ply") parse_error("malformed PLY header: missing 'ply' magic (header line 1)");
  while (true) {
    if (!next_line(line)) parse_error("malformed PLY header: missing end_header" + where());
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "format") {
      if (tok.size() < 2) parse_error("malformed PLY header: bad format line" + where());
      if (tok[1] == "ascii") {
        header.binary = false;
      } else if (tok[1] == "binary_little_endian") {
        header.binary = true;
      } else {
        parse_error("malformed PLY header: unsupported format '" + std::string(tok[1]) + "'" + where());
      }
      saw_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) parse_error("malformed PLY header: bad element line" + where());
      PlyElement el;
      el.header_line = line_no;
      el.name = tok[1];
      auto [p, ec] = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), el.count);
      if (ec != std::errc() || p != tok[2].data() + tok[2].size()) {
        parse_error("malformed PLY header: bad element count" + where());
      }
      header.elements.push_back(std::move(el));
    } else if (tok[0] == "property") {
      if (header.elements.empty()) parse_error("malformed PLY header: property before element" + where());
      PlyProperty prop;
      if (tok.size() == 5 && tok[1] == "list") {
        prop.is_list = true;
        if (!parse_type(tok[2], prop.count_type) || !parse_type(tok[3], prop.type)) {
          parse_error("malformed PLY header: unknown list type" + where());
        }
        prop.name = tok[4];
      } else if (tok.size() == 3) {
        if (!parse_type(tok[1], prop.type)) {
          parse_error("malformed PLY header: unknown property type '" + std::string(tok[1]) + "'" + where());
        }
        prop.name = tok[2];
      } else {
        parse_error("malformed PLY header: bad property line" + where());
      }
      header.elements.back().properties.push_back(std::move(prop));
    } else {
      parse_error("malformed PLY header: unexpected keyword '" + std::string(tok[0]) + "'" + where());
    }
  }
  if (!saw_format) parse_error("malformed PLY header: no format line");
  header.data_offset = pos;
  return header;
}

double read_binary_scalar(const char* p, PlyType t) {
  auto load = [p](auto tag) {
    decltype(tag) v;
    std::memcpy(&v, p, sizeof(v));
    if constexpr (std::endian::native == std::endian::big && sizeof(v) > 1) {
      auto* bytes = reinterpret_cast<unsigned char*>(&v);
      std::reverse(bytes, bytes + sizeof(v));
    }
    return static_cast<double>(v);
  };
  switch (t) {
    case PlyType::Int8: return load(std::int8_t{});
    case PlyType::UInt8: return load(std::uint8_t{});
    case PlyType::Int16: return load(std::int16_t{});
    case PlyType::UInt16: return load(std::uint16_t{});
    case PlyType::Int32: return load(std::int32_t{});
    case PlyType::UInt32: return load(std::uint32_t{});
    case PlyType::Float32: return load(float{});
    case PlyType::Float64: return load(double{});
  }
  return 0.0;
}

struct VertexSlots {
  int x = -1, y = -1, z = -1, nx = -1, ny = -1, nz = -1;
};

VertexSlots find_vertex_slots(const PlyElement& vertex) {
  VertexSlots s;
  for (int i = 0; i < static_cast<int>(vertex.properties.size()); ++i) {
    const auto& p = vertex.properties[i];
    if (p.is_list) continue;
    if (p.name == "x") s.x = i;
    else if (p.name == "y") s.y = i;
    else if (p.name == "z") s.z = i;
    else if (p.name == "nx") s.nx = i;
    else if (p.name == "ny") s.ny = i;
    else if (p.name == "nz") s.nz = i;
  }
  if (s.x < 0 || s.y < 0 || s.z < 0) parse_error("malformed PLY header: vertex element declared at line " +
                                                    std::to_string(vertex.header_line) + " lacks x/y/z");
  return s;
}

void store_vertex(PointCloud& cloud, const VertexSlots& s, const std::vector<double>& values,
                  const std::string& where) {
  Point3 p(values[s.x], values[s.y], values[s.z]);
  if (!p.allFinite()) parse_error("non-finite coordinate" + where);
  cloud.points.push_back(p);
  if (s.nx >= 0 && s.ny >= 0 && s.nz >= 0) {
    cloud.normals.emplace_back(values[s.nx], values[s.ny], values[s.nz]);
  }
}

PointCloud parse_ply_binary(const std::string& data, const PlyHeader& header) {
  PointCloud cloud;
  std::size_t pos = header.data_offset;
  auto need = [&](std::size_t bytes) {
    if (pos + bytes > data.size()) {
      parse_error("truncated PLY payload at byte " + std::to_string(pos));
    }
  };
  for (const auto& el : header.elements) {
    const bool is_vertex = el.name == "vertex";
    VertexSlots slots;
    if (is_vertex) {
      slots = find_vertex_slots(el);
      cloud.points.reserve(el.count);
    }
    std::vector<double> values(el.properties.size());
    for (std::size_t row = 0; row < el.count; ++row) {
      const std::size_t row_start = pos;
      for (std::size_t k = 0; k < el.properties.size(); ++k) {
        const auto& prop = el.properties[k];
        if (prop.is_list) {
          need(type_size(prop.count_type));
          const auto n = static_cast<std::size_t>(read_binary_scalar(data.data() + pos, prop.count_type));
          pos += type_size(prop.count_type);
          need(n * type_size(prop.type));
          pos += n * type_size(prop.type);
        } else {
          need(type_size(prop.type));
          values[k] = read_binary_scalar(data.data() + pos, prop.type);
          pos += type_size(prop.type);
        }
      }
      if (is_vertex) store_vertex(cloud, slots, values, " at byte " + std::to_string(row_start));
    }
    if (is_vertex) break;  // trailing elements (faces, ...) are not needed
  }
  return cloud;
}

PointCloud parse_ply_ascii(const std::string& data, const PlyHeader& header) {
  PointCloud cloud;
  std::size_t pos = header.data_offset;
  // Header line count, so payload errors can name the absolute file line.
  std::size_t line_no = static_cast<std::size_t>(
      std::count(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
  auto next_line = [&](std::vector<std::string_view>& tokens) {
    while (pos < data.size()) {
      std::size_t eol = data.find('\n', pos);
      if (eol == std::string::npos) eol = data.size();
      auto line = std::string_view(data).substr(pos, eol - pos);
      pos = eol + 1;
      ++line_no;
      tokens = split_ws(line);
      if (!tokens.empty()) return true;
    }
    return false;
  };

  std::vector<std::string_view> tok;
  for (const auto& el : header.elements) {
    const bool is_vertex = el.name == "vertex";
    VertexSlots slots;
    if (is_vertex) slots = find_vertex_slots(el);
    std::vector<double> values(el.properties.size());
    for (std::size_t row = 0; row < el.count; ++row) {
      if (!next_line(tok)) {
        parse_error("truncated PLY payload: expected " + std::to_string(el.count) + " " + el.name +
                    " rows, got " + std::to_string(row) + " (line " + std::to_string(line_no + 1) + ")");
      }
      const std::string where = " at line " + std::to_string(line_no);
      std::size_t t = 0;
      for (std::size_t k = 0; k < el.properties.size(); ++k) {
        const auto& prop = el.properties[k];
        if (t >= tok.size()) parse_error("truncated PLY row" + where);
        if (prop.is_list) {
          double n = 0;
          if (!parse_double(tok[t], n) || n < 0) parse_error("bad list count" + where);
          t += 1 + static_cast<std::size_t>(n);
          if (t > tok.size()) parse_error("truncated PLY list" + where);
        } else {
          if (!parse_double(tok[t], values[k])) {
            parse_error("invalid number '" + std::string(tok[t]) + "'" + where);
          }
          ++t;
        }
      }
      if (is_vertex) store_vertex(cloud, slots, values, where);
    }
    if (is_vertex) break;
  }
  return cloud;
}

PointCloud parse_xyz(const std::string& data) {
  PointCloud cloud;
  std::size_t pos = 0, line_no = 0;
  bool normals_ok = true;
  std::vector<Vector3> normals;
  while (pos < data.size()) {
    std::size_t eol = data.find('\n', pos);
    if (eol == std::string::npos) eol = data.size();
    auto line = std::string_view(data).substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == '#') continue;
    const std::string where = " at line " + std::to_string(line_no);
    if (tok.size() < 3) parse_error("XYZ line has fewer than 3 columns" + where);
    std::array<double, 6> v{};
    const std::size_t cols = tok.size() == 6 ? 6 : 3;
    for (std::size_t k = 0; k < cols; ++k) {
      if (!parse_double(tok[k], v[k])) parse_error("invalid number '" + std::string(tok[k]) + "'" + where);
    }
    Point3 p(v[0], v[1], v[2]);
    if (!p.allFinite()) parse_error("non-finite coordinate" + where);
    cloud.points.push_back(p);
    if (cols == 6) normals.emplace_back(v[3], v[4], v[5]);
    else normals_ok = false;
  }
  if (cloud.empty()) parse_error("XYZ file contains no points");
  if (normals_ok) cloud.normals = std::move(normals);
  return cloud;
}

bool has_ply_extension(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".ply";
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
  const std::string data = read_file(path);
  const bool looks_ply = data.rfind("ply", 0) == 0;
  if (format == CloudFormat::Auto) {
    format = (has_ply_extension(path) || looks_ply) ? CloudFormat::PlyAscii : CloudFormat::XyzText;
    if (format == CloudFormat::PlyAscii && looks_ply) {
      format = parse_ply_header(data).binary ? CloudFormat::PlyBinaryLE : CloudFormat::PlyAscii;
    }
  }
  PointCloud cloud;
  if (format == CloudFormat::XyzText) {
    cloud = parse_xyz(data);
  } else {
    const PlyHeader header = parse_ply_header(data);
    if (header.binary != (format == CloudFormat::PlyBinaryLE)) {
      parse_error("malformed PLY header: declared format does not match file '" + path.string() + "'");
    }
    cloud = header.binary ? parse_ply_binary(data, header) : parse_ply_ascii(data, header);
    if (cloud.empty()) parse_error("PLY file '" + path.string() + "' has no vertices");
  }
  finish_normals(cloud);
  return cloud;
}

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format) {
  if (format == CloudFormat::Auto) {
    format = has_ply_extension(path) ? CloudFormat::PlyBinaryLE : CloudFormat::XyzText;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  const bool normals = cloud.has_normals();

  if (format == CloudFormat::XyzText) {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const auto& p = cloud.points[i];
      out << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z());
      if (normals) {
        const auto& n = cloud.normals[i];
        out << ' ' << format_double(n.x()) << ' ' << format_double(n.y()) << ' ' << format_double(n.z());
      }
      out << '\n';
    }
  } else {
    const bool binary = format == CloudFormat::PlyBinaryLE;
    out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
        << "element vertex " << cloud.size() << "\n"
        << "property double x\nproperty double y\nproperty double z\n";
    if (normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
    out << "end_header\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      std::array<double, 6> row{cloud.points[i].x(), cloud.points[i].y(), cloud.points[i].z(), 0, 0, 0};
      if (normals) {
        row[3] = cloud.normals[i].x();
        row[4] = cloud.normals[i].y();
        row[5] = cloud.normals[i].z();
      }
      const std::size_t cols = normals ? 6 : 3;
      if (binary) {
        for (std::size_t k = 0; k < cols; ++k) {
          double v = row[k];
          if constexpr (std::endian::native == std::endian::big) {
            auto* b = reinterpret_cast<unsigned char*>(&v);
            std::reverse(b, b + sizeof(v));
          }
          out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
      } else {
        for (std::size_t k = 0; k < cols; ++k) out << (k ? " " : "") << format_double(row[k]);
        out << '\n';
      }
    }
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------

PointCloud NormalizationRecord::to_raw(const PointCloud& cloud) const {
  PointCloud out = cloud;
  for (auto& p : out.points) p = to_raw(p);
  return out;
}

double normalization_scale(const PointCloud& cloud) {
  const Point3 c = geom::centroid(cloud.points);
  double scale = 0.0;
  for (const auto& p : cloud.points) scale = std::max(scale, (p - c).cwiseAbs().maxCoeff());
  return scale;
}

NormalizedCloud centralize_with_scale(const PointCloud& cloud, double scale) {
  geom::validate(cloud);
  if (!(scale > 0.0)) throw Error(ErrorCode::DegenerateCloud, "cloud has zero extent");
  NormalizedCloud out;
  out.record.centroid = geom::centroid(cloud.points);
  out.record.scale = scale;
  out.cloud.normals = cloud.normals;
  out.cloud.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.cloud.points.push_back(out.record.to_normalized(p));
  return out;
}

NormalizedCloud centralize_normalize(const PointCloud& cloud) {
  geom::validate(cloud);
  return centralize_with_scale(cloud, normalization_scale(cloud));
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel) {
  if (!(voxel > 0.0)) throw Error(ErrorCode::InvalidArgument, "voxel size must be positive");
  if (cloud.empty()) return {};
  Point3 lo = cloud.points.front();
  for (const auto& p : cloud.points) lo = lo.cwiseMin(p);

  struct Key {
    std::int64_t x, y, z;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::size_t h = std::hash<std::int64_t>{}(k.x);
      h = h * 1000003u ^ std::hash<std::int64_t>{}(k.y);
      return h * 1000003u ^ std::hash<std::int64_t>{}(k.z);
    }
  };
  std::unordered_map<Key, std::size_t, KeyHash> slot_of;
  std::vector<Point3> sums;
  std::vector<std::size_t> counts;
  for (const auto& p : cloud.points) {
    const Eigen::Vector3d cell = ((p - lo) / voxel).array().floor();
    const Key key{static_cast<std::int64_t>(cell.x()), static_cast<std::int64_t>(cell.y()),
                  static_cast<std::int64_t>(cell.z())};
    auto [it, inserted] = slot_of.try_emplace(key, sums.size());
    if (inserted) {
      sums.push_back(Point3::Zero());
      counts.push_back(0);
    }
    sums[it->second] += p;
    ++counts[it->second];
  }
  PointCloud out;
  out.points.reserve(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    out.points.push_back(sums[i] / static_cast<double>(counts[i]));
  }
  return out;
}

PointCloud downsample_to_cap(const PointCloud& cloud, std::size_t cap) {
  if (cap == 0) throw Error(ErrorCode::InvalidArgument, "downsample cap must be positive");
  if (cloud.size() <= cap) return cloud;
  const double diag = geom::bounding_box_diagonal(cloud);
  double lo = diag * 1e-6;  // too fine: count > cap
  double hi = diag * 2.0;   // one voxel
  PointCloud best = voxel_downsample(cloud, hi);
  for (int iter = 0; iter < 40; ++iter) {
    const double mid = std::sqrt(lo * hi);
    PointCloud candidate = voxel_downsample(cloud, mid);
    if (candidate.size() <= cap) {
      hi = mid;
      if (candidate.size() >= best.size()) best = std::move(candidate);
      if (best.size() == cap) break;
    } else {
      lo = mid;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

std::string_view to_string(TransformSubspace subspace) {
  switch (subspace) {
    case TransformSubspace::SR_ST: return "SRxST";
    case TransformSubspace::SR_LT: return "SRxLT";
    case TransformSubspace::LR_ST: return "LRxST";
    case TransformSubspace::LR_LT: return "LRxLT";
    case TransformSubspace::Full: return "FULL";
  }
  return "?";
}

TransformSubspace subspace_from_string(std::string_view name) {
  for (auto s : {TransformSubspace::SR_ST, TransformSubspace::SR_LT, TransformSubspace::LR_ST,
                 TransformSubspace::LR_LT, TransformSubspace::Full}) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown transform subspace '" + std::string(name) + "'");
}

namespace {

// |x| uniform in (lo, hi], random sign.
double sample_magnitude(double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double mag = hi - u(rng) * (hi - lo);
  return u(rng) < 0.5 ? -mag : mag;
}

double sample_symmetric(double bound, std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(-bound, bound)(rng);
}

}  // namespace

geom::EulerPose random_pose(TransformSubspace subspace, double diag, std::mt19937_64& rng) {
  if (!(diag > 0.0)) throw Error(ErrorCode::InvalidArgument, "diag must be positive");
  using std::numbers::pi;
  const bool full = subspace == TransformSubspace::Full;
  const bool large_rot = subspace == TransformSubspace::LR_ST || subspace == TransformSubspace::LR_LT;
  const bool large_trans = subspace == TransformSubspace::SR_LT || subspace == TransformSubspace::LR_LT;

  geom::EulerPose pose;
  if (full) {
    pose.theta1 = sample_symmetric(pi, rng);
    pose.theta2 = sample_symmetric(pi / 2, rng);
    pose.theta3 = sample_symmetric(pi, rng);
  } else if (large_rot) {
    pose.theta1 = sample_magnitude(pi / 2, pi, rng);
    pose.theta2 = sample_magnitude(pi / 4, pi / 2, rng);
    pose.theta3 = sample_magnitude(pi / 2, pi, rng);
  } else {
    pose.theta1 = sample_symmetric(pi / 2, rng);
    pose.theta2 = sample_symmetric(pi / 4, rng);
    pose.theta3 = sample_symmetric(pi / 2, rng);
  }
  Vector3 t;
  for (int k = 0; k < 3; ++k) {
    if (full) t[k] = sample_symmetric(diag, rng);
    else if (large_trans) t[k] = sample_magnitude(diag / 2, diag, rng);
    else t[k] = sample_symmetric(diag / 2, rng);
  }
  pose.translation = t;
  return pose;
}

RigidTransform random_transform(TransformSubspace subspace, double diag, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  return geom::pose_to_transform(random_pose(subspace, diag, rng));
}

DatasetPair normalize_pair(const PointCloud& source, const PointCloud& target,
                           const RigidTransform* raw_ground_truth) {
  const double scale = std::max(normalization_scale(source), normalization_scale(target));
  auto src = centralize_with_scale(source, scale);
  auto tgt = centralize_with_scale(target, scale);
  DatasetPair pair;
  pair.source = std::move(src.cloud);
  pair.target = std::move(tgt.cloud);
  pair.source_record = src.record;
  pair.target_record = tgt.record;
  if (raw_ground_truth) {
    // gt_n(s) = (R (scale*s + c_s) + t - c_t) / scale
    const auto& g = *raw_ground_truth;
    pair.ground_truth.rotation = g.rotation;
    pair.ground_truth.translation =
        (g.rotation * pair.source_record.centroid + g.translation - pair.target_record.centroid) / scale;
  }
  return pair;
}

DatasetPair make_pair(const PointCloud& cloud, const RigidTransform& t_gt, bool normalize) {
  geom::validate(cloud);
  const PointCloud source = geom::apply_transform(cloud, t_gt);
  const RigidTransform raw_gt = t_gt.inverse();
  if (normalize) return normalize_pair(source, cloud, &raw_gt);
  DatasetPair pair;
  pair.source = source;
  pair.target = cloud;
  pair.ground_truth = raw_gt;
  return pair;
}

// ---------------------------------------------------------------------------

namespace {

struct Ellipsoid {
  Vector3 center;
  Vector3 radii;
  Eigen::Matrix3d rotation;

  bool contains(const Point3& p) const {
    const Vector3 local = rotation.transpose() * (p - center);
    return local.cwiseQuotient(radii).squaredNorm() < 1.0 - 1e-9;
  }
  double approx_area() const {
    constexpr double k = 1.6075;
    const double a = std::pow(radii.x(), k), b = std::pow(radii.y(), k), c = std::pow(radii.z(), k);
    return 4.0 * std::numbers::pi * std::pow((a * b + a * c + b * c) / 3.0, 1.0 / k);
  }
};

std::vector<Ellipsoid> surrogate_parts() {
  auto rot = [](double z, double y, double x) { return geom::euler_to_rotation(z, y, x); };
  return {
      {{0.0, 0.0, 0.0}, {1.0, 0.72, 0.66}, rot(0.0, 0.15, 0.0)},         // body
      {{0.95, 0.12, 0.48}, {0.46, 0.38, 0.40}, rot(0.3, -0.2, 0.0)},     // head
      {{1.02, 0.30, 1.00}, {0.12, 0.08, 0.42}, rot(0.2, -0.35, 0.30)},   // ear
      {{1.18, -0.02, 0.92}, {0.10, 0.07, 0.34}, rot(-0.4, 0.5, -0.20)},  // ear
      {{-1.02, 0.06, 0.22}, {0.20, 0.18, 0.18}, rot(0.0, 0.0, 0.0)},     // tail
      {{0.45, 0.34, -0.58}, {0.36, 0.20, 0.14}, rot(0.25, 0.0, 0.0)},    // front foot
      {{-0.55, -0.40, -0.52}, {0.42, 0.22, 0.16}, rot(-0.3, 0.1, 0.0)},  // hind foot
  };
}

}  // namespace

PointCloud synthetic_surrogate(std::size_t num_points, std::uint64_t seed) {
  const auto parts = surrogate_parts();
  std::vector<double> areas;
  for (const auto& e : parts) areas.push_back(e.approx_area());
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(areas.begin(), areas.end());
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  PointCloud cloud;
  cloud.points.reserve(num_points);
  while (cloud.size() < num_points) {
    const auto& e = parts[pick(rng)];
    Vector3 dir(gauss(rng), gauss(rng), gauss(rng));
    if (dir.norm() < 1e-12) continue;
    dir.normalize();
    // Area-uniform sampling on an ellipsoid by rejection on the sphere.
    const double a = e.radii.x(), b = e.radii.y(), c = e.radii.z();
    const double g = std::sqrt(std::pow(b * c * dir.x(), 2) + std::pow(a * c * dir.y(), 2) +
                               std::pow(a * b * dir.z(), 2));
    const double g_max = std::max({b * c, a * c, a * b});
    if (u(rng) * g_max > g) continue;
    const Point3 p = e.center + e.rotation * dir.cwiseProduct(e.radii);
    bool hidden = false;
    for (const auto& other : parts) {
      if (&other != &e && other.contains(p)) {
        hidden = true;
        break;
      }
    }
    if (!hidden) cloud.points.push_back(p);
  }
  return cloud;
}

}  // namespace emtr::ingest
