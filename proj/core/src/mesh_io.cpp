#include "meshadv/mesh_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace meshadv {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

// next non-empty, non-comment line
bool next_line(std::istream& in, std::string& line, char comment = '#') {
  while (std::getline(in, line)) {
    std::size_t i = line.find_first_not_of(" \t\r\n");
    if (i == std::string::npos) continue;
    if (line[i] == comment) continue;
    return true;
  }
  return false;
}

void fan_triangulate(const std::vector<int>& poly, std::vector<Face>& faces) {
  if (poly.size() < 3) throw ParseError("face with fewer than 3 vertices");
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
    faces.push_back({poly[0], poly[static_cast<int>(k)], poly[k + 1]});
  }
}

Mesh finish(std::vector<Vec3> vertices, std::vector<Face> faces) {
  if (vertices.empty() || faces.empty()) throw EmptyMesh("mesh has zero vertices or zero faces");
  return make_mesh(std::move(vertices), std::move(faces));
}

Mesh load_off(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) throw ParseError("empty OFF file");
  std::istringstream hdr(line);
  std::string magic;
  hdr >> magic;
  if (magic != "OFF") throw ParseError("missing OFF header");
  long nv = -1, nf = -1, ne = 0;
  if (!(hdr >> nv >> nf >> ne)) {
    // counts on their own line
    if (!next_line(in, line)) throw ParseError("missing OFF counts line");
    std::istringstream counts(line);
    if (!(counts >> nv >> nf)) throw ParseError("malformed OFF counts line");
    counts >> ne;
  }
  if (nv < 0 || nf < 0) throw ParseError("negative OFF counts");
  std::vector<Vec3> vertices;
  vertices.reserve(nv);
  for (long i = 0; i < nv; ++i) {
    if (!next_line(in, line)) throw ParseError("unexpected end of OFF vertex list");
    std::istringstream v(line);
    double x, y, z;
    if (!(v >> x >> y >> z)) throw ParseError("malformed OFF vertex line: " + line);
    vertices.emplace_back(x, y, z);
  }
  std::vector<Face> faces;
  faces.reserve(nf);
  for (long i = 0; i < nf; ++i) {
    if (!next_line(in, line)) throw ParseError("unexpected end of OFF face list");
    std::istringstream f(line);
    int k;
    if (!(f >> k)) throw ParseError("malformed OFF face line: " + line);
    std::vector<int> poly(k);
    for (int j = 0; j < k; ++j) {
      if (!(f >> poly[j])) throw ParseError("malformed OFF face line: " + line);
    }
    fan_triangulate(poly, faces);
  }
  return finish(std::move(vertices), std::move(faces));
}

int parse_obj_index(const std::string& token, std::size_t nv) {
  // "a", "a/b", "a/b/c", "a//c" — only the vertex index matters here
  const std::size_t slash = token.find('/');
  int idx = 0;
  try {
    idx = std::stoi(slash == std::string::npos ? token : token.substr(0, slash));
  } catch (const std::exception&) {
    throw ParseError("malformed OBJ face token: " + token);
  }
  if (idx < 1 || static_cast<std::size_t>(idx) > nv) {
    throw IndexError("OBJ face index " + std::to_string(idx) + " out of range");
  }
  return idx - 1;  // 1-based to 0-based
}

Mesh load_obj(std::istream& in) {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::string line;
  while (next_line(in, line)) {
    std::istringstream s(line);
    std::string tag;
    s >> tag;
    if (tag == "v") {
      double x, y, z;
      if (!(s >> x >> y >> z)) throw ParseError("malformed OBJ vertex line: " + line);
      vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string token;
      while (s >> token) poly.push_back(parse_obj_index(token, vertices.size()));
      fan_triangulate(poly, faces);
    }
    // other tags (vn, vt, usemtl, ...) ignored
  }
  return finish(std::move(vertices), std::move(faces));
}

struct PlyProperty {
  std::string name;
  bool is_list = false;
};

Mesh load_ply_stream(std::istream& in, PlyAttributes* attrs) {
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply") throw ParseError("missing ply magic");
  long nv = -1, nf = -1;
  std::vector<PlyProperty> vertex_props;
  std::string current_element;
  bool ascii = false;
  while (std::getline(in, line)) {
    std::istringstream s(line);
    std::string tag;
    s >> tag;
    if (tag == "format") {
      std::string fmt;
      s >> fmt;
      ascii = (fmt == "ascii");
    } else if (tag == "element") {
      std::string name;
      long count;
      s >> name >> count;
      current_element = name;
      if (name == "vertex") nv = count;
      if (name == "face") nf = count;
    } else if (tag == "property") {
      if (current_element == "vertex") {
        std::string type, name;
        s >> type;
        PlyProperty p;
        p.is_list = (type == "list");
        if (p.is_list) {
          std::string idx_type;
          s >> idx_type >> name;
        }
        s >> name;
        p.name = name;
        vertex_props.push_back(p);
      }
    } else if (tag == "end_header") {
      break;
    }
  }
  if (!ascii) throw ParseError("only ascii PLY is supported");
  if (nv < 0 || nf < 0) throw ParseError("PLY header missing vertex or face element");

  int ix = -1, iy = -1, iz = -1, iq = -1, ir = -1, ig = -1, ib = -1;
  for (std::size_t i = 0; i < vertex_props.size(); ++i) {
    const std::string& n = vertex_props[i].name;
    if (n == "x") ix = static_cast<int>(i);
    else if (n == "y") iy = static_cast<int>(i);
    else if (n == "z") iz = static_cast<int>(i);
    else if (n == "quality") iq = static_cast<int>(i);
    else if (n == "red") ir = static_cast<int>(i);
    else if (n == "green") ig = static_cast<int>(i);
    else if (n == "blue") ib = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError("PLY vertex element lacks x/y/z");

  std::vector<Vec3> vertices;
  vertices.reserve(nv);
  for (long i = 0; i < nv; ++i) {
    if (!next_line(in, line, '\0')) throw ParseError("unexpected end of PLY vertex list");
    std::istringstream v(line);
    std::vector<double> vals(vertex_props.size());
    for (double& x : vals) {
      if (!(v >> x)) throw ParseError("malformed PLY vertex line: " + line);
    }
    vertices.emplace_back(vals[ix], vals[iy], vals[iz]);
    if (attrs) {
      if (iq >= 0) attrs->quality.push_back(vals[iq]);
      if (ir >= 0 && ig >= 0 && ib >= 0) {
        attrs->color.push_back({static_cast<std::uint8_t>(vals[ir]),
                                static_cast<std::uint8_t>(vals[ig]),
                                static_cast<std::uint8_t>(vals[ib])});
      }
    }
  }
  std::vector<Face> faces;
  faces.reserve(nf);
  for (long i = 0; i < nf; ++i) {
    if (!next_line(in, line, '\0')) throw ParseError("unexpected end of PLY face list");
    std::istringstream f(line);
    int k;
    if (!(f >> k)) throw ParseError("malformed PLY face line: " + line);
    std::vector<int> poly(k);
    for (int j = 0; j < k; ++j) {
      if (!(f >> poly[j])) throw ParseError("malformed PLY face line: " + line);
    }
    fan_triangulate(poly, faces);
  }
  return finish(std::move(vertices), std::move(faces));
}

void write_coord(std::ostream& out, double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  out << buf;
}

void write_vertex(std::ostream& out, const Vec3& v) {
  write_coord(out, v.x());
  out << ' ';
  write_coord(out, v.y());
  out << ' ';
  write_coord(out, v.z());
}

}  // namespace

MeshFormat format_from_path(const std::filesystem::path& path) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".off") return MeshFormat::OFF;
  if (ext == ".obj") return MeshFormat::OBJ;
  if (ext == ".ply") return MeshFormat::PLY;
  throw ConfigError("cannot infer mesh format from extension: " + path.string());
}

Mesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  auto in = open_input(path);
  switch (format) {
    case MeshFormat::OFF: return load_off(in);
    case MeshFormat::OBJ: return load_obj(in);
    case MeshFormat::PLY: return load_ply_stream(in, nullptr);
  }
  throw ConfigError("unknown mesh format");
}

Mesh load_mesh(const std::filesystem::path& path) {
  return load_mesh(path, format_from_path(path));
}

Mesh load_ply(const std::filesystem::path& path, PlyAttributes* attrs) {
  auto in = open_input(path);
  return load_ply_stream(in, attrs);
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path, MeshFormat format) {
  if (mesh.vertices.empty() || mesh.faces.empty()) {
    throw EmptyMesh("refusing to save a mesh with zero vertices or zero faces");
  }
  if (format == MeshFormat::PLY) {
    save_ply(mesh, path);
    return;
  }
  auto out = open_output(path);
  if (format == MeshFormat::OFF) {
    out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_faces() << " 0\n";
    for (const Vec3& v : mesh.vertices) {
      write_vertex(out, v);
      out << '\n';
    }
    for (const Face& f : mesh.faces) {
      out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
    }
  } else {  // OBJ
    for (const Vec3& v : mesh.vertices) {
      out << "v ";
      write_vertex(out, v);
      out << '\n';
    }
    for (const Face& f : mesh.faces) {
      out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  save_mesh(mesh, path, format_from_path(path));
}

void save_ply(const Mesh& mesh, const std::filesystem::path& path, const PlyAttributes* attrs) {
  if (mesh.vertices.empty() || mesh.faces.empty()) {
    throw EmptyMesh("refusing to save a mesh with zero vertices or zero faces");
  }
  const bool has_quality = attrs && !attrs->quality.empty();
  const bool has_color = attrs && !attrs->color.empty();
  if (has_quality && attrs->quality.size() != mesh.vertices.size()) {
    throw DimensionMismatch("quality attribute size does not match vertex count");
  }
  if (has_color && attrs->color.size() != mesh.vertices.size()) {
    throw DimensionMismatch("color attribute size does not match vertex count");
  }
  auto out = open_output(path);
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << mesh.num_vertices() << '\n';
  out << "property double x\nproperty double y\nproperty double z\n";
  if (has_quality) out << "property double quality\n";
  if (has_color) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "element face " << mesh.num_faces() << '\n';
  out << "property list uchar int vertex_indices\n";
  out << "end_header\n";
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    write_vertex(out, mesh.vertices[i]);
    if (has_quality) {
      out << ' ';
      write_coord(out, attrs->quality[i]);
    }
    if (has_color) {
      out << ' ' << int(attrs->color[i][0]) << ' ' << int(attrs->color[i][1]) << ' '
          << int(attrs->color[i][2]);
    }
    out << '\n';
  }
  for (const Face& f : mesh.faces) {
    out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace meshadv
