#include "meshadv/walk.hpp"

#include <algorithm>

namespace meshadv {

int default_walk_length(const Mesh& mesh) { return std::min(200, mesh.num_vertices()); }

Walk extract_walk(const Mesh& mesh, int length, Rng& rng) {
  const int nv = mesh.num_vertices();
  if (nv == 0) throw EmptyMesh("cannot walk an empty mesh");
  if (length < 1) throw ConfigError("walk length must be >= 1");

  Walk walk;
  walk.vertex_indices.reserve(length);
  walk.jump_flags.reserve(length);
  std::vector<char> visited(nv, 0);
  std::vector<int> candidates;

  int current = static_cast<int>(rng.uniform_index(nv));
  visited[current] = 1;
  walk.vertex_indices.push_back(current);
  walk.jump_flags.push_back(false);

  while (walk.length() < length) {
    const std::vector<int>& nbrs = mesh.adjacency[current];
    bool jump = false;
    int next;
    if (!nbrs.empty()) {
      candidates.clear();
      for (int u : nbrs) {
        if (!visited[u]) candidates.push_back(u);
      }
      if (!candidates.empty()) {
        next = candidates[rng.uniform_index(candidates.size())];
      } else {
        // all neighbors visited: revisit one, staying on the surface
        next = nbrs[rng.uniform_index(nbrs.size())];
      }
    } else {
      // isolated vertex: jump to an unvisited vertex
      candidates.clear();
      for (int u = 0; u < nv; ++u) {
        if (!visited[u]) candidates.push_back(u);
      }
      if (!candidates.empty()) {
        next = candidates[rng.uniform_index(candidates.size())];
      } else {
        next = static_cast<int>(rng.uniform_index(nv));
      }
      jump = true;
    }
    visited[next] = 1;
    walk.vertex_indices.push_back(next);
    walk.jump_flags.push_back(jump);
    current = next;
  }

  walk.coords.resize(walk.length(), 3);
  for (int t = 0; t < walk.length(); ++t) {
    walk.coords.row(t) = mesh.vertices[walk.vertex_indices[t]].transpose();
  }
  return walk;
}

std::vector<Walk> walk_batch(const Mesh& mesh, int count, int length, Rng& rng) {
  if (mesh.num_vertices() == 0) throw EmptyMesh("cannot walk an empty mesh");
  std::vector<Walk> walks;
  walks.reserve(count);
  for (int i = 0; i < count; ++i) walks.push_back(extract_walk(mesh, length, rng));
  return walks;
}

}  // namespace meshadv
