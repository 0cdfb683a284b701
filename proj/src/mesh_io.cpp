// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "lasst/mesh.hpp"

namespace lasst {
namespace {

using Kind = MeshError::Kind;

enum class PlyType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

std::optional<PlyType> parse_type(const std::string& s) {
  if (s == "char" || s == "int8") return PlyType::kInt8;
  if (s == "uchar" || s == "uint8") return PlyType::kUInt8;
  if (s == "short" || s == "int16") return PlyType::kInt16;
  if (s == "ushort" || s == "uint16") return PlyType::kUInt16;
  if (s == "int" || s == "int32") return PlyType::kInt32;
  if (s == "uint" || s == "uint32") return PlyType::kUInt32;
  if (s == "float" || s == "float32") return PlyType::kFloat32;
  if (s == "double" || s == "float64") return PlyType::kFloat64;
  return std::nullopt;
}

std::size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::kInt8:
    case PlyType::kUInt8: return 1;
    case PlyType::kInt16:
    case PlyType::kUInt16: return 2;
    case PlyType::kInt32:
    case PlyType::kUInt32:
    case PlyType::kFloat32: return 4;
    case PlyType::kFloat64: return 8;
  }
  return 0;
}

bool is_integral(PlyType t) { return t != PlyType::kFloat32 && t != PlyType::kFloat64; }

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat32;
  bool is_list = false;
  PlyType count_type = PlyType::kUInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;

  int find(std::initializer_list<const char*> names) const {
    for (const char* n : names) {
      for (std::size_t i = 0; i < properties.size(); ++i) {
        if (properties[i].name == n) return int(i);
      }
    }
    return -1;
  }
};

enum class PlyFormat { kAscii, kBinaryLittle, kBinaryBig };

struct PlyHeader {
  PlyFormat format = PlyFormat::kAscii;
  std::vector<PlyElement> elements;
};

PlyHeader parse_header(std::istream& in, const std::string& origin) {
  auto fail = [&](const std::string& msg) {
    throw MeshError(Kind::kMalformedHeader, origin + ": " + msg);
  };
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply") fail("missing 'ply' magic");
  PlyHeader header;
  bool have_format = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string keyword;
    ls >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "end_header") {
      if (!have_format) fail("no format line");
      return header;
    }
    if (keyword == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii") header.format = PlyFormat::kAscii;
      else if (fmt == "binary_little_endian") header.format = PlyFormat::kBinaryLittle;
      else if (fmt == "binary_big_endian") header.format = PlyFormat::kBinaryBig;
      else fail("unknown format '" + fmt + "'");
      have_format = true;
    } else if (keyword == "element") {
      PlyElement e;
      long long count = -1;
      ls >> e.name >> count;
      if (e.name.empty() || count < 0) fail("bad element line '" + line + "'");
      e.count = std::size_t(count);
      header.elements.push_back(std::move(e));
    } else if (keyword == "property") {
      if (header.elements.empty()) fail("property before any element");
      PlyProperty p;
      std::string t;
      ls >> t;
      if (t == "list") {
        std::string ct, it;
        ls >> ct >> it >> p.name;
        auto c = parse_type(ct);
        auto i = parse_type(it);
        if (!c || !i || !is_integral(*c)) fail("bad list property '" + line + "'");
        p.is_list = true;
        p.count_type = *c;
        p.type = *i;
      } else {
        auto ty = parse_type(t);
        if (!ty) fail("unknown property type '" + t + "'");
        p.type = *ty;
        ls >> p.name;
      }
      if (p.name.empty()) fail("property without a name");
      header.elements.back().properties.push_back(p);
    } else {
      fail("unexpected header line '" + line + "'");
    }
  }
  fail("header not terminated by end_header");
  return header;
}

/// Sequential reader over the PLY body that yields every scalar as a double.
class BodyReader {
 public:
  BodyReader(std::istream& in, PlyFormat format, std::string origin)
      : format_(format), origin_(std::move(origin)) {
    if (format_ == PlyFormat::kAscii) {
      ascii_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    } else {
      bytes_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
  }

  double read(PlyType type) {
    if (format_ != PlyFormat::kAscii) return read_binary(type);
    // a float32 column holds float32 values whichever way it was written
    return type == PlyType::kFloat32 ? double(float(read_ascii())) : read_ascii();
  }

 private:
  double read_ascii() {
    while (pos_ < ascii_.size() && std::isspace(static_cast<unsigned char>(ascii_[pos_]))) ++pos_;
    if (pos_ >= ascii_.size()) truncated();
    std::size_t end = pos_;
    while (end < ascii_.size() && !std::isspace(static_cast<unsigned char>(ascii_[end]))) ++end;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(ascii_.data() + pos_, ascii_.data() + end, value);
    if (ec != std::errc() || ptr != ascii_.data() + end) {
      throw MeshError(Kind::kMalformedBody,
                      origin_ + ": bad ascii token '" + ascii_.substr(pos_, end - pos_) + "'");
    }
    pos_ = end;
    return value;
  }

  double read_binary(PlyType type) {
    const std::size_t n = type_size(type);
    if (pos_ + n > bytes_.size()) truncated();
    std::array<unsigned char, 8> raw{};
    std::memcpy(raw.data(), bytes_.data() + pos_, n);
    pos_ += n;
    const bool file_little = format_ == PlyFormat::kBinaryLittle;
    if (file_little != (std::endian::native == std::endian::little)) std::reverse(raw.begin(), raw.begin() + n);
    switch (type) {
      case PlyType::kInt8: return double(std::bit_cast<std::int8_t>(raw[0]));
      case PlyType::kUInt8: return double(raw[0]);
      case PlyType::kInt16: return double(load<std::int16_t>(raw));
      case PlyType::kUInt16: return double(load<std::uint16_t>(raw));
      case PlyType::kInt32: return double(load<std::int32_t>(raw));
      case PlyType::kUInt32: return double(load<std::uint32_t>(raw));
      case PlyType::kFloat32: return double(load<float>(raw));
      case PlyType::kFloat64: return load<double>(raw);
    }
    return 0.0;
  }

  template <typename T>
  static T load(const std::array<unsigned char, 8>& raw) {
    T v;
    std::memcpy(&v, raw.data(), sizeof(T));
    return v;
  }

  [[noreturn]] void truncated() const {
    throw MeshError(Kind::kMalformedBody, origin_ + ": unexpected end of data");
  }

  PlyFormat format_;
  std::string origin_;
  std::string ascii_;
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

Label to_label(double value, const std::string& origin) {
  if (!(value >= 0.0) || value != std::floor(value) ||
      value > double(std::numeric_limits<Label>::max() - 1)) {
    throw MeshError(Kind::kInvalidMesh, origin + ": label must be a non-negative integer");
  }
  return Label(value);
}

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> raw;
  std::memcpy(raw.data(), &value, sizeof(T));
  if constexpr (std::endian::native != std::endian::little) std::reverse(raw.begin(), raw.end());
  out.write(raw.data(), sizeof(T));
}

std::uint8_t quantize(double c) {
  return std::uint8_t(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
}

}  // namespace

template <typename Scalar>
void validate_mesh(const SceneMesh<Scalar>& mesh) {
  const Eigen::Index n = mesh.vertex_count();
  if (mesh.colors.rows() != n) {
    throw MeshError(Kind::kInvalidMesh, "color count differs from vertex count");
  }
  if (Eigen::Index(mesh.labels.size()) != n) {
    throw MeshError(Kind::kInvalidMesh, "label count differs from vertex count");
  }
  if (!mesh.vertices.allFinite()) throw MeshError(Kind::kInvalidMesh, "non-finite vertex position");
  if (!mesh.colors.allFinite() || (mesh.colors.array() < Scalar(0)).any() ||
      (mesh.colors.array() > Scalar(1)).any()) {
    throw MeshError(Kind::kInvalidMesh, "vertex colors must lie in [0,1]");
  }
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const std::int64_t idx = mesh.faces(f, k);
      if (idx < 0 || idx >= n) {
        throw MeshError(Kind::kIndexOutOfRange,
                        "face " + std::to_string(f) + " references vertex index " +
                            std::to_string(idx) + " but the mesh has " + std::to_string(n) +
                            " vertices",
                        idx);
      }
    }
  }
}

std::vector<Label> load_label_file(const std::filesystem::path& path, Eigen::Index vertex_count) {
  std::ifstream in(path);
  if (!in) throw MeshError(Kind::kFileNotFound, "cannot open label file " + path.string());
  std::vector<Label> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    long long value = -1;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
    if (ec != std::errc() || ptr != line.data() + line.size() || value < 0) {
      throw MeshError(Kind::kLabelFileMismatch, path.string() + ":" + std::to_string(line_no) +
                                                    ": expected a non-negative integer");
    }
    labels.push_back(to_label(double(value), path.string()));
  }
  if (Eigen::Index(labels.size()) != vertex_count) {
    throw MeshError(Kind::kLabelFileMismatch,
                    path.string() + " has " + std::to_string(labels.size()) +
                        " labels but the mesh has " + std::to_string(vertex_count) + " vertices");
  }
  return labels;
}

template <typename Scalar>
SceneMesh<Scalar> load_mesh(const std::filesystem::path& path,
                            const std::optional<std::filesystem::path>& label_file) {
  const std::string origin = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MeshError(Kind::kFileNotFound, "cannot open " + origin);

  const PlyHeader header = parse_header(in, origin);
  BodyReader body(in, header.format, origin);

  SceneMesh<Scalar> mesh;
  bool have_vertices = false;
  bool have_labels = false;
  std::vector<std::array<std::int64_t, 3>> faces;

  for (const PlyElement& element : header.elements) {
    const bool is_vertex = element.name == "vertex";
    const bool is_face = element.name == "face";
    int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1, il = -1, iface = -1;
    if (is_vertex) {
      ix = element.find({"x"});
      iy = element.find({"y"});
      iz = element.find({"z"});
      ir = element.find({"red", "diffuse_red"});
      ig = element.find({"green", "diffuse_green"});
      ib = element.find({"blue", "diffuse_blue"});
      il = element.find({"label"});
      if (ix < 0 || iy < 0 || iz < 0) {
        throw MeshError(Kind::kMissingProperty, origin + ": vertex element lacks x/y/z");
      }
      if (ir < 0 || ig < 0 || ib < 0) {
        throw MeshError(Kind::kMissingProperty, origin + ": vertex element lacks red/green/blue");
      }
      mesh.vertices.resize(Eigen::Index(element.count), 3);
      mesh.colors.resize(Eigen::Index(element.count), 3);
      if (il >= 0) mesh.labels.resize(element.count);
      have_vertices = true;
      have_labels = il >= 0;
    } else if (is_face) {
      iface = element.find({"vertex_indices", "vertex_index"});
      if (iface < 0 || !element.properties[std::size_t(iface)].is_list) {
        throw MeshError(Kind::kMissingProperty, origin + ": face element lacks vertex_indices");
      }
      faces.reserve(element.count);
    }

    const int props = int(element.properties.size());
    for (std::size_t row = 0; row < element.count; ++row) {
      for (int p = 0; p < props; ++p) {
        const PlyProperty& prop = element.properties[std::size_t(p)];
        if (prop.is_list) {
          const double count = body.read(prop.count_type);
          if (count < 0) throw MeshError(Kind::kMalformedBody, origin + ": negative list length");
          const auto n = std::size_t(count);
          if (p == iface) {
            if (n != 3) {
              throw MeshError(Kind::kMalformedBody, origin + ": face " + std::to_string(row) +
                                                        " has " + std::to_string(n) +
                                                        " vertices; only triangles are supported");
            }
            std::array<std::int64_t, 3> tri{};
            for (auto& t : tri) t = std::int64_t(body.read(prop.type));
            faces.push_back(tri);
          } else {
            for (std::size_t k = 0; k < n; ++k) body.read(prop.type);
          }
          continue;
        }
        const double v = body.read(prop.type);
        if (!is_vertex) continue;
        const auto r = Eigen::Index(row);
        if (p == ix) mesh.vertices(r, 0) = Scalar(v);
        else if (p == iy) mesh.vertices(r, 1) = Scalar(v);
        else if (p == iz) mesh.vertices(r, 2) = Scalar(v);
        else if (p == ir || p == ig || p == ib) {
          const int c = p == ir ? 0 : (p == ig ? 1 : 2);
          mesh.colors(r, c) = Scalar(is_integral(prop.type) ? v / 255.0 : std::clamp(v, 0.0, 1.0));
        } else if (p == il) {
          mesh.labels[row] = to_label(v, origin);
        }
      }
    }
  }
  if (!have_vertices) throw MeshError(Kind::kMissingProperty, origin + ": no vertex element");

  const Eigen::Index n = mesh.vertex_count();
  mesh.faces.resize(Eigen::Index(faces.size()), 3);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const std::int64_t idx = faces[f][std::size_t(k)];
      if (idx < 0 || idx >= n) {
        throw MeshError(Kind::kIndexOutOfRange,
                        origin + ": face " + std::to_string(f) + " references vertex index " +
                            std::to_string(idx) + " but only " + std::to_string(n) +
                            " vertices exist",
                        idx);
      }
      mesh.faces(Eigen::Index(f), k) = std::int32_t(idx);
    }
  }

  if (label_file) {
    mesh.labels = load_label_file(*label_file, n);
  } else if (!have_labels) {
    throw MeshError(Kind::kMissingLabels,
                    origin + ": no per-vertex 'label' property; supply a label file");
  }
  validate_mesh(mesh);
  return mesh;
}

template <typename Scalar>
void save_mesh(const SceneMesh<Scalar>& mesh, const UnitBallTransform<Scalar>& transform,
               const std::filesystem::path& path, PlyEncoding encoding) {
  validate_mesh(mesh);
  const VertexMatrix<Scalar> positions = transform.invert(mesh.vertices);
  const bool wide_labels =
      std::any_of(mesh.labels.begin(), mesh.labels.end(), [](Label l) { return l > 0xffff; });

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw MeshError(Kind::kIo, "cannot open " + path.string() + " for writing");

  const bool ascii = encoding == PlyEncoding::kAscii;
  out << "ply\n"
      << (ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n")
      << "element vertex " << mesh.vertex_count() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << (wide_labels ? "property uint label\n" : "property ushort label\n")
      << "element face " << mesh.face_count() << "\n"
      << "property list uchar int vertex_indices\n"
      << "end_header\n";

  for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i) {
    const std::array<float, 3> p{float(positions(i, 0)), float(positions(i, 1)),
                                 float(positions(i, 2))};
    const std::array<std::uint8_t, 3> c{quantize(double(mesh.colors(i, 0))),
                                        quantize(double(mesh.colors(i, 1))),
                                        quantize(double(mesh.colors(i, 2)))};
    const Label label = mesh.labels[std::size_t(i)];
    if (ascii) {
      std::array<char, 64> buf;
      for (float v : p) {
        auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
        out.write(buf.data(), res.ptr - buf.data());
        out << ' ';
      }
      out << int(c[0]) << ' ' << int(c[1]) << ' ' << int(c[2]) << ' ' << label << '\n';
    } else {
      for (float v : p) put(out, v);
      for (std::uint8_t v : c) put(out, v);
      if (wide_labels) put(out, std::uint32_t(label));
      else put(out, std::uint16_t(label));
    }
  }
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    if (ascii) {
      out << "3 " << mesh.faces(f, 0) << ' ' << mesh.faces(f, 1) << ' ' << mesh.faces(f, 2) << '\n';
    } else {
      put(out, std::uint8_t(3));
      for (int k = 0; k < 3; ++k) put(out, std::int32_t(mesh.faces(f, k)));
    }
  }
  out.flush();
  if (!out) throw MeshError(Kind::kIo, "write failed for " + path.string());
}

#define LASST_INSTANTIATE_MESH_IO(Scalar)                                                       \
  template void validate_mesh<Scalar>(const SceneMesh<Scalar>&);                                \
  template SceneMesh<Scalar> load_mesh<Scalar>(const std::filesystem::path&,                    \
                                               const std::optional<std::filesystem::path>&);    \
  template void save_mesh<Scalar>(const SceneMesh<Scalar>&, const UnitBallTransform<Scalar>&,   \
                                  const std::filesystem::path&, PlyEncoding);

LASST_INSTANTIATE_MESH_IO(float)
LASST_INSTANTIATE_MESH_IO(double)

#undef LASST_INSTANTIATE_MESH_IO

}  // namespace lasst
