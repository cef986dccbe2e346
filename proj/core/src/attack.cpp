#include "meshadv/attack.hpp"

#include <cmath>
#include <fstream>

#include "meshadv/walk.hpp"

namespace meshadv {

void AttackConfig::validate() const {
  if (alpha < 0.0) throw ConfigError("alpha must be >= 0");
  if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  if (stop_k < 1) throw ConfigError("stop_k must be >= 1");
  if (walk_length < 0) throw ConfigError("walk_length must be >= 0");
}

namespace {

AttackResult run_attack(const Mesh& mesh, int reference_class, bool targeted,
                        const ImitatorParams& imitator, const AttackConfig& config) {
  config.validate();
  const int classes = imitator.spec.classes;
  if (reference_class < 0 || reference_class >= classes) {
    throw DimensionMismatch("class index out of range for this imitator");
  }
  const double radius = bounding_radius(mesh, Vec3::Zero());
  if (std::abs(radius - 1.0) > 0.05) {
    throw NotNormalized("mesh radius " + std::to_string(radius) +
                        " deviates from 1 by more than 0.05; normalize first");
  }

  AttackResult result;
  result.attacked_mesh = mesh;
  Mesh& current = result.attacked_mesh;
  const PredictionVector ref = one_hot(reference_class, classes);
  const int length = config.walk_length > 0 ? config.walk_length : default_walk_length(mesh);
  Rng rng(config.seed);

  int consecutive = 0;
  for (int iteration = 1; iteration <= config.max_iterations; ++iteration) {
    const Walk walk = extract_walk(current, length, rng);
    const ForwardTrace trace = forward(imitator, walk.coords);
    const int predicted = argmax(trace.prediction);
    const double loss = kld(ref, trace.prediction);
    result.loss_trace.push_back(loss);
    result.final_prediction = trace.prediction;
    result.iterations_used = iteration;

    const bool condition_met = targeted ? predicted == reference_class
                                        : predicted != reference_class;
    if (condition_met) {
      ++consecutive;
    } else {
      consecutive = 0;
    }
    result.log.push_back({iteration, predicted, loss, walk.vertex_indices.front(), consecutive});
    if (consecutive >= config.stop_k) {
      result.success = true;
      break;
    }
    if (condition_met) continue;  // no update on a satisfied walk

    const Gradients grads = backward(imitator, walk.coords, trace, ref);
    // untargeted: ascend the divergence from the source class;
    // targeted: descend the divergence from the target class
    const double step = targeted ? -config.alpha : config.alpha;
    for (int t = 0; t < walk.length(); ++t) {
      current.vertices[walk.vertex_indices[t]] += step * grads.wrt_coords.row(t).transpose();
    }
  }

  result.displacement.resize(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    result.displacement[v] = current.vertices[v] - mesh.vertices[v];
  }
  return result;
}

}  // namespace

AttackResult attack(const Mesh& mesh, int label, const ImitatorParams& imitator,
                    const AttackConfig& config) {
  return run_attack(mesh, label, /*targeted=*/false, imitator, config);
}

AttackResult targeted_attack(const Mesh& mesh, int target, const ImitatorParams& imitator,
                             const AttackConfig& config) {
  return run_attack(mesh, target, /*targeted=*/true, imitator, config);
}

Mesh random_perturbation(const Mesh& mesh, double fraction, double magnitude, Rng& rng) {
  if (fraction < 0.0 || fraction > 1.0) throw ConfigError("fraction must be in [0, 1]");
  if (magnitude < 0.0) throw ConfigError("magnitude must be >= 0");
  Mesh out = mesh;
  const int nv = mesh.num_vertices();
  const int count = static_cast<int>(std::floor(fraction * nv));
  if (count == 0 || magnitude == 0.0) return out;

  // partial Fisher-Yates for a uniform subset
  std::vector<int> pool(nv);
  for (int i = 0; i < nv; ++i) pool[i] = i;
  for (int i = 0; i < count; ++i) {
    const std::size_t j = i + rng.uniform_index(nv - i);
    std::swap(pool[i], pool[j]);
  }

  std::vector<Vec3> offsets(count);
  double total = 0.0;
  for (int i = 0; i < count; ++i) {
    offsets[i] = Vec3(rng.normal(), rng.normal(), rng.normal());
    total += offsets[i].norm();
  }
  if (total <= 0.0) return out;
  // mesh-level mean displacement (over all vertices) equals `magnitude`
  const double scale = magnitude * nv / total;
  for (int i = 0; i < count; ++i) {
    out.vertices[pool[i]] += scale * offsets[i];
  }
  return out;
}

void write_attack_log(const AttackResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "# iteration predicted kld_loss walk_start consecutive_misses\n";
  for (const auto& rec : result.log) {
    out << rec.iteration << ' ' << rec.predicted << ' ' << rec.loss << ' ' << rec.walk_start
        << ' ' << rec.consecutive << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace meshadv
