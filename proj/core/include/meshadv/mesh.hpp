#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "meshadv/errors.hpp"

namespace meshadv {

using Vec3 = Eigen::Vector3d;
using Face = std::array<int, 3>;

/// Triangle mesh: vertex positions, faces, and a cached vertex adjacency
/// derived from the faces. Immutable in spirit: mutate vertices only through
/// code that owns the mesh (the attack loop); adjacency depends on faces only.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  // per-vertex sorted neighbor lists, one entry per undirected edge end
  std::vector<std::vector<int>> adjacency;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_faces() const { return static_cast<int>(faces.size()); }
};

struct LabeledMesh {
  Mesh mesh;
  int label = 0;
  std::string source_id;
};

// Builds sorted per-vertex neighbor lists from the face set. Vertices not
// referenced by any face get empty lists.
std::vector<std::vector<int>> build_adjacency(int num_vertices, const std::vector<Face>& faces);

// Validates face index bounds, no degenerate faces, adjacency symmetry and
// exact agreement with the edges induced by the faces. Throws on violation.
void validate_mesh(const Mesh& mesh);

// Constructs a mesh from raw data, building and validating adjacency.
Mesh make_mesh(std::vector<Vec3> vertices, std::vector<Face> faces);

// Centers the mesh at its vertex centroid and scales so the farthest vertex
// sits at distance 1 from the origin. Faces unchanged.
Mesh normalize_unit_sphere(const Mesh& mesh);

Vec3 centroid(const Mesh& mesh);

// Max distance of any vertex from `center`.
double bounding_radius(const Mesh& mesh, const Vec3& center);

// 64-bit FNV-1a over the raw vertex bytes; stable content identity used to
// derive per-mesh walk seeds.
std::uint64_t vertex_content_hash(const Mesh& mesh);

}  // namespace meshadv
