#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "meshadv/mesh.hpp"
#include "meshadv/net.hpp"
#include "meshadv/rng.hpp"

namespace meshadv {

struct AttackConfig {
  double alpha = 0.01;      // vertex step scale for normalized meshes
  int max_iterations = 1000;
  int walk_length = 0;      // 0: min(200, |V|)
  int stop_k = 3;           // consecutive misclassifications declaring success
  std::uint64_t seed = 0;

  void validate() const;
};

struct AttackResult {
  Mesh attacked_mesh;
  bool success = false;
  int iterations_used = 0;
  std::vector<Vec3> displacement;  // attacked - original, per vertex
  PredictionVector final_prediction;
  std::vector<double> loss_trace;  // KLD per iteration

  struct LogRecord {
    int iteration;
    int predicted;
    double loss;
    int walk_start;
    int consecutive;
  };
  std::vector<LogRecord> log;
};

// Iterative walk / predict / gradient / vertex-update loop. Each iteration
// walks the current (already modified) mesh; on a correct prediction the
// walk's vertices move by +alpha * dKLD/dvertex (first-order ascent on the
// divergence from the source one-hot), one contribution per walk occurrence.
// Topology never changes. The mesh must be unit-sphere normalized at entry
// (radius within 0.05 of 1), else NotNormalized is thrown.
AttackResult attack(const Mesh& mesh, int label, const ImitatorParams& imitator,
                    const AttackConfig& config);

// Same loop with the loss taken against the target class one-hot vector and
// the update descending it; success requires argmax == target stop_k times
// in a row.
AttackResult targeted_attack(const Mesh& mesh, int target, const ImitatorParams& imitator,
                             const AttackConfig& config);

// Displaces a uniform floor(fraction * |V|)-subset of vertices by isotropic
// Gaussian offsets, rescaled so the mesh-level mean per-vertex displacement
// equals `magnitude`.
Mesh random_perturbation(const Mesh& mesh, double fraction, double magnitude, Rng& rng);

void write_attack_log(const AttackResult& result, const std::filesystem::path& path);

}  // namespace meshadv
