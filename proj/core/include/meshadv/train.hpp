#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "meshadv/net.hpp"
#include "meshadv/synth.hpp"
#include "meshadv/victim.hpp"

namespace meshadv {

struct TrainConfig {
  int epochs = 40;
  int walks_per_mesh_per_epoch = 4;
  int walk_length = 0;  // 0: min(200, |V|) per mesh
  double learning_rate = 1e-3;
  int batch_size = 16;  // walks per optimizer step
  std::uint64_t seed = 0;
  LossKind loss = LossKind::CrossEntropy;

  // network dimensions; desk-scale defaults, grow for larger datasets
  int lift1 = 32;
  int hidden = 64;
  int rnn_layers = 2;

  // walk-coordinate Gaussian noise during training; makes victims robust to
  // uniform random perturbation, which classification networks are expected
  // to withstand
  double augment_jitter = 0.01;

  int query_walks = 8;  // walks averaged per victim query

  void validate() const;
};

/// Adam over any parameter struct that supports visit_tensors/zeros_like.
template <typename P>
class Adam {
 public:
  Adam(const P& like, double lr) : m_(zeros_like(like)), v_(zeros_like(like)), lr_(lr) {}

  void step(P& params, const P& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    auto flat = [](auto& p) {
      std::vector<double*> ptrs;
      std::vector<Eigen::Index> sizes;
      visit_tensors(p, [&](const std::string&, auto& t) {
        ptrs.push_back(t.data());
        sizes.push_back(t.size());
      });
      return std::make_pair(ptrs, sizes);
    };
    auto [pp, ps] = flat(params);
    auto [gp, gs] = flat(const_cast<P&>(grads));
    auto [mp, ms] = flat(m_);
    auto [vp, vs] = flat(v_);
    for (std::size_t k = 0; k < pp.size(); ++k) {
      for (Eigen::Index i = 0; i < ps[k]; ++i) {
        const double g = gp[k][i];
        mp[k][i] = beta1_ * mp[k][i] + (1.0 - beta1_) * g;
        vp[k][i] = beta2_ * vp[k][i] + (1.0 - beta2_) * g * g;
        pp[k][i] -= lr_ * (mp[k][i] / bc1) / (std::sqrt(vp[k][i] / bc2) + eps_);
      }
    }
  }

 private:
  P m_, v_;
  int t_ = 0;
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
};

struct TrainLog {
  std::vector<double> epoch_loss;      // mean loss per epoch
  std::vector<double> epoch_accuracy;  // walk-level argmax accuracy per epoch
};

struct TrainedImitator {
  ImitatorParams params;
  TrainLog log;
};

// Trains a walk-based classifier on one-hot labels (loss must be
// CrossEntropy). Throws NonConvergence if final train accuracy, measured with
// walk-averaged queries, stays below 60%.
TrainedImitator train_victim_net(const Dataset& dataset, const TrainConfig& config);

std::shared_ptr<Victim> wrap_walk_victim(const TrainedImitator& trained,
                                         const TrainConfig& config,
                                         const std::vector<std::string>& class_names);

// Distills the victim's queried prediction vectors (loss must be KLD; one
// target per train mesh). Throws NonConvergence if the mean train KLD fails
// to drop below 50% of its initial value.
TrainedImitator train_imitator(const std::vector<LabeledMesh>& train_meshes,
                               const std::vector<PredictionVector>& targets,
                               int classes, const TrainConfig& config);

// Trains the per-face feature victim with cross-entropy.
FaceFeatParams train_face_victim(const Dataset& dataset, const TrainConfig& config);

}  // namespace meshadv
