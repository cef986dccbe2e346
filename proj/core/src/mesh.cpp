#include "meshadv/mesh.hpp"

#include <algorithm>
#include <cstring>
#include <set>

namespace meshadv {

std::vector<std::vector<int>> build_adjacency(int num_vertices, const std::vector<Face>& faces) {
  std::vector<std::set<int>> nbr(num_vertices);
  for (const Face& f : faces) {
    for (int idx : f) {
      if (idx < 0 || idx >= num_vertices) {
        throw IndexError("face index " + std::to_string(idx) + " out of range [0, " +
                         std::to_string(num_vertices) + ")");
      }
    }
    for (int e = 0; e < 3; ++e) {
      const int a = f[e];
      const int b = f[(e + 1) % 3];
      nbr[a].insert(b);
      nbr[b].insert(a);
    }
  }
  std::vector<std::vector<int>> adjacency(num_vertices);
  for (int v = 0; v < num_vertices; ++v) {
    adjacency[v].assign(nbr[v].begin(), nbr[v].end());
  }
  return adjacency;
}

void validate_mesh(const Mesh& mesh) {
  const int nv = mesh.num_vertices();
  for (const Face& f : mesh.faces) {
    for (int idx : f) {
      if (idx < 0 || idx >= nv) {
        throw IndexError("face index " + std::to_string(idx) + " out of range [0, " +
                         std::to_string(nv) + ")");
      }
    }
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
      throw ParseError("face repeats a vertex index");
    }
  }
  const auto expected = build_adjacency(nv, mesh.faces);
  if (mesh.adjacency != expected) {
    throw ParseError("adjacency does not match the edges induced by the faces");
  }
  for (int v = 0; v < nv; ++v) {
    for (int u : mesh.adjacency[v]) {
      const auto& back = mesh.adjacency[u];
      if (!std::binary_search(back.begin(), back.end(), v)) {
        throw ParseError("adjacency is not symmetric");
      }
    }
  }
}

Mesh make_mesh(std::vector<Vec3> vertices, std::vector<Face> faces) {
  Mesh mesh;
  mesh.vertices = std::move(vertices);
  mesh.faces = std::move(faces);
  mesh.adjacency = build_adjacency(mesh.num_vertices(), mesh.faces);
  validate_mesh(mesh);
  return mesh;
}

Vec3 centroid(const Mesh& mesh) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& v : mesh.vertices) c += v;
  return c / static_cast<double>(mesh.num_vertices());
}

double bounding_radius(const Mesh& mesh, const Vec3& center) {
  double r = 0.0;
  for (const Vec3& v : mesh.vertices) r = std::max(r, (v - center).norm());
  return r;
}

Mesh normalize_unit_sphere(const Mesh& mesh) {
  if (mesh.num_vertices() < 2) throw DegenerateMesh("need at least 2 vertices");
  const Vec3 c = centroid(mesh);
  const double r = bounding_radius(mesh, c);
  if (r < 1e-12) throw DegenerateMesh("all vertices coincide");
  Mesh out = mesh;
  for (Vec3& v : out.vertices) v = (v - c) / r;
  return out;
}

std::uint64_t vertex_content_hash(const Mesh& mesh) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (const Vec3& v : mesh.vertices) {
    mix(v.x());
    mix(v.y());
    mix(v.z());
  }
  return h;
}

}  // namespace meshadv
