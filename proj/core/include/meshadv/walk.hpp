#pragma once

#include <vector>

#include <Eigen/Dense>

#include "meshadv/mesh.hpp"
#include "meshadv/rng.hpp"

namespace meshadv {

/// Random walk over mesh edges. coords row t holds the mesh position of
/// vertex_indices[t] at extraction time.
struct Walk {
  std::vector<int> vertex_indices;
  std::vector<bool> jump_flags;  // true when the step was a jump, not an edge
  Eigen::MatrixX3d coords;       // L x 3

  int length() const { return static_cast<int>(vertex_indices.size()); }
};

// Start vertex uniform over all vertices. Each step picks uniformly among the
// unvisited neighbors of the current vertex; if all neighbors are visited, a
// uniform neighbor is revisited (still an edge step); a vertex with no
// neighbors jumps uniformly to an unvisited vertex (jump_flag true).
Walk extract_walk(const Mesh& mesh, int length, Rng& rng);

std::vector<Walk> walk_batch(const Mesh& mesh, int count, int length, Rng& rng);

// Default walk length used across training and attack when none is given.
int default_walk_length(const Mesh& mesh);

}  // namespace meshadv
