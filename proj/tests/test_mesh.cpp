#include <doctest.h>

#include <Eigen/Geometry>

#include "meshadv/mesh.hpp"
#include "meshadv/rng.hpp"
#include "test_util.hpp"

using namespace meshadv;

TEST_CASE("tetrahedron adjacency is K4") {
  const Mesh m = test::tetrahedron();
  REQUIRE(m.num_vertices() == 4);
  REQUIRE(m.num_faces() == 4);
  for (int v = 0; v < 4; ++v) {
    CHECK(m.adjacency[v].size() == 3);
    for (int u : m.adjacency[v]) CHECK(u != v);
  }
}

TEST_CASE("disjoint triangles form two components") {
  const Mesh m = test::disjoint_triangles();
  for (int v = 0; v < 3; ++v) {
    CHECK(m.adjacency[v] == std::vector<int>{v == 0 ? 1 : 0, v == 2 ? 1 : 2});
  }
  for (int v = 3; v < 6; ++v) {
    for (int u : m.adjacency[v]) CHECK(u >= 3);
  }
}

TEST_CASE("vertex referenced by no face has an empty neighbor list") {
  const auto adj = build_adjacency(4, {{0, 1, 2}});
  CHECK(adj[3].empty());
  CHECK(adj[0] == std::vector<int>{1, 2});
}

TEST_CASE("make_mesh rejects out-of-range face indices") {
  CHECK_THROWS_AS(make_mesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 7}}), IndexError);
}

TEST_CASE("make_mesh rejects faces that repeat a vertex") {
  CHECK_THROWS_AS(make_mesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 1}}), ParseError);
}

TEST_CASE("normalize_unit_sphere centers and scales") {
  std::vector<Vec3> corners;
  for (int i = 0; i < 8; ++i) {
    corners.emplace_back(i & 1 ? 5 : -5, i & 2 ? 5 : -5, i & 4 ? 5 : -5);
  }
  // cube surface as 12 triangles over the 8 corners
  const std::vector<Face> faces = {{0, 1, 3}, {0, 3, 2}, {4, 6, 7}, {4, 7, 5},
                                   {0, 4, 5}, {0, 5, 1}, {2, 3, 7}, {2, 7, 6},
                                   {0, 2, 6}, {0, 6, 4}, {1, 5, 7}, {1, 7, 3}};
  const Mesh m = normalize_unit_sphere(make_mesh(corners, faces));
  CHECK(centroid(m).norm() < 1e-6);
  for (const Vec3& v : m.vertices) CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(m.faces == faces);
}

TEST_CASE("normalize_unit_sphere is idempotent") {
  const Mesh once = normalize_unit_sphere(test::tetrahedron());
  const Mesh twice = normalize_unit_sphere(once);
  for (int v = 0; v < once.num_vertices(); ++v) {
    CHECK((once.vertices[v] - twice.vertices[v]).norm() < 1e-6);
  }
}

TEST_CASE("normalize_unit_sphere rejects coincident vertices") {
  CHECK_THROWS_AS(
      normalize_unit_sphere(make_mesh({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}, {{0, 1, 2}})),
      DegenerateMesh);
}

TEST_CASE("normalize_unit_sphere commutes with rotation") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Mesh m = test::tetrahedron();
    for (Vec3& v : m.vertices) {
      v += Vec3(rng.normal(), rng.normal(), rng.normal());
    }
    const Eigen::Matrix3d rot =
        Eigen::AngleAxisd(rng.uniform(0, 6.28), Vec3(rng.normal(), rng.normal(), rng.normal())
                                                    .normalized())
            .toRotationMatrix();
    Mesh rotated = m;
    for (Vec3& v : rotated.vertices) v = rot * v;
    const Mesh a = normalize_unit_sphere(rotated);
    const Mesh b = normalize_unit_sphere(m);
    for (int v = 0; v < m.num_vertices(); ++v) {
      CHECK((a.vertices[v] - rot * b.vertices[v]).norm() < 1e-5);
    }
  }
}

TEST_CASE("content hash tracks vertex data only") {
  const Mesh a = test::tetrahedron();
  Mesh b = a;
  CHECK(vertex_content_hash(a) == vertex_content_hash(b));
  b.vertices[0].x() += 1e-12;
  CHECK(vertex_content_hash(a) != vertex_content_hash(b));
}
