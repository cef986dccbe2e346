#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "meshadv/checkpoint.hpp"
#include "meshadv/mesh.hpp"
#include "meshadv/net.hpp"
#include "meshadv/synth.hpp"

namespace meshadv {

/// Black-box query capability: the only surface the attacker may touch.
class Victim {
 public:
  virtual ~Victim() = default;
  virtual PredictionVector query(const Mesh& mesh) const = 0;
  virtual const std::string& name() const = 0;
  virtual int num_classes() const = 0;
  virtual const std::vector<std::string>& class_names() const = 0;
};

// Walk-based classifier: averages softmax outputs over `n_walks` walks whose
// seed derives from the victim seed and a hash of the mesh's vertex data, so
// repeated queries on the same mesh are identical.
std::shared_ptr<Victim> make_walk_victim(ImitatorParams params, int n_walks, int walk_length,
                                         std::uint64_t seed, std::vector<std::string> class_names,
                                         std::string name = "walk-victim");

/// Per-face permutation-invariant network: centroid+normal+area through a
/// shared two-layer perceptron, mean-pooled, then a linear classifier.
struct FaceFeatParams {
  int hidden = 64;
  int classes = 0;
  Affine m1, m2, out;
};

FaceFeatParams init_face_params(int hidden, int classes, std::uint64_t seed);
FaceFeatParams zeros_like(const FaceFeatParams& params);

template <typename P, typename F>
  requires requires(P& p) { p.m1; p.m2; p.out; }
void visit_tensors(P&& params, F&& f) {
  f("m1.W", params.m1.W);
  f("m1.b", params.m1.b);
  f("m2.W", params.m2.W);
  f("m2.b", params.m2.b);
  f("out.W", params.out.W);
  f("out.b", params.out.b);
}

// F x 7 matrix of per-face centroid, unit normal, area.
MatrixXd face_features(const Mesh& mesh);

PredictionVector face_net_predict(const FaceFeatParams& params, const Mesh& mesh);

// Cross-entropy gradient of the face network on one mesh.
FaceFeatParams face_net_backward(const FaceFeatParams& params, const Mesh& mesh,
                                 const PredictionVector& ref, double* loss_out = nullptr);

std::shared_ptr<Victim> make_face_victim(FaceFeatParams params,
                                         std::vector<std::string> class_names,
                                         std::string name = "face-victim");

void save_face_net(const FaceFeatParams& params, const std::filesystem::path& path);
FaceFeatParams load_face_net(const std::filesystem::path& path);

// Victim backed by a lookup table keyed on vertex content hash; used to prove
// the attack pipeline needs nothing but prediction vectors.
std::shared_ptr<Victim> make_table_victim(const std::vector<Mesh>& meshes,
                                          const std::vector<PredictionVector>& predictions,
                                          std::vector<std::string> class_names);

// One prediction per mesh, order preserving.
std::vector<PredictionVector> query_all(const Victim& victim, const std::vector<Mesh>& meshes);

// Record format: source_id, then D comma-separated probabilities per line.
void save_predictions(const std::vector<std::string>& source_ids,
                      const std::vector<PredictionVector>& predictions,
                      const std::filesystem::path& path);
std::pair<std::vector<std::string>, std::vector<PredictionVector>> load_predictions(
    const std::filesystem::path& path);

// Walk-averaged imitator prediction for a whole mesh.
PredictionVector predict_mesh(const ImitatorParams& params, const Mesh& mesh, int n_walks,
                              int walk_length, std::uint64_t seed);

// Fraction of meshes where the imitator's walk-averaged argmax matches the
// victim's argmax.
double agreement(const ImitatorParams& imitator, const Victim& victim,
                 const std::vector<Mesh>& meshes, int n_walks, std::uint64_t seed);

}  // namespace meshadv
