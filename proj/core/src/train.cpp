#include "meshadv/train.hpp"

#include <cmath>

#include "meshadv/rng.hpp"
#include "meshadv/walk.hpp"

namespace meshadv {

void TrainConfig::validate() const {
  if (epochs < 0 || walks_per_mesh_per_epoch < 1 || batch_size < 1) {
    throw ConfigError("epochs must be >= 0, walks per mesh and batch size positive");
  }
  if (learning_rate <= 0.0) throw ConfigError("learning rate must be positive");
  if (lift1 < 1 || hidden < 1 || rnn_layers < 1) throw ConfigError("bad network dimensions");
  if (walk_length < 0 || augment_jitter < 0 || query_walks < 1) {
    throw ConfigError("bad walk/query configuration");
  }
}

namespace {

Eigen::MatrixX3d maybe_jitter(const Eigen::MatrixX3d& coords, double sigma, Rng& rng) {
  if (sigma <= 0.0) return coords;
  Eigen::MatrixX3d out = coords;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (int k = 0; k < 3; ++k) out(i, k) += sigma * rng.normal();
  }
  return out;
}

struct WalkTask {
  int mesh_index;
};

// dst += scale * src over every tensor entry
template <typename P>
void add_scaled(P& dst, const P& src, double scale) {
  std::vector<const double*> ptrs;
  std::vector<Eigen::Index> sizes;
  visit_tensors(const_cast<P&>(src), [&](const std::string&, auto& t) {
    ptrs.push_back(t.data());
    sizes.push_back(t.size());
  });
  std::size_t k = 0;
  visit_tensors(dst, [&](const std::string&, auto& t) {
    Eigen::Map<Eigen::ArrayXd>(t.data(), t.size()) +=
        scale * Eigen::Map<const Eigen::ArrayXd>(ptrs[k], sizes[k]);
    ++k;
  });
}

// Shared SGD loop for victim and imitator training; `target_for` supplies the
// reference distribution per mesh.
template <typename TargetFn>
TrainedImitator train_walk_net(const std::vector<LabeledMesh>& meshes, int classes,
                               const TrainConfig& config, TargetFn&& target_for) {
  config.validate();
  if (meshes.empty()) throw ConfigError("no training meshes");

  NetSpec spec;
  spec.lift1 = config.lift1;
  spec.hidden = config.hidden;
  spec.rnn_layers = config.rnn_layers;
  spec.classes = classes;

  TrainedImitator out;
  out.params = init_params(spec, split_seed(config.seed, 101));
  Adam<ImitatorParams> opt(out.params, config.learning_rate);
  Rng rng(split_seed(config.seed, 202));

  std::vector<WalkTask> tasks;
  tasks.reserve(meshes.size() * config.walks_per_mesh_per_epoch);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    tasks.clear();
    for (int rep = 0; rep < config.walks_per_mesh_per_epoch; ++rep) {
      for (std::size_t i = 0; i < meshes.size(); ++i) {
        tasks.push_back({static_cast<int>(i)});
      }
    }
    rng.shuffle(tasks);

    double loss_sum = 0.0;
    int hit = 0;
    std::size_t cursor = 0;
    while (cursor < tasks.size()) {
      const std::size_t batch_end = std::min(cursor + config.batch_size, tasks.size());
      ImitatorParams grads = zeros_like(out.params);
      const int batch_n = static_cast<int>(batch_end - cursor);
      for (; cursor < batch_end; ++cursor) {
        const LabeledMesh& lm = meshes[tasks[cursor].mesh_index];
        const int length =
            config.walk_length > 0 ? config.walk_length : default_walk_length(lm.mesh);
        const Walk walk = extract_walk(lm.mesh, length, rng);
        const Eigen::MatrixX3d coords = maybe_jitter(walk.coords, config.augment_jitter, rng);
        const PredictionVector ref = target_for(tasks[cursor].mesh_index);
        const ForwardTrace trace = forward(out.params, coords);
        loss_sum += loss_value(config.loss, ref, trace.prediction);
        if (argmax(trace.prediction) == argmax(ref)) ++hit;
        const Gradients g = backward(out.params, coords, trace, ref);
        add_scaled(grads, g.params, 1.0 / batch_n);
      }
      opt.step(out.params, grads);
    }
    out.log.epoch_loss.push_back(loss_sum / static_cast<double>(tasks.size()));
    out.log.epoch_accuracy.push_back(static_cast<double>(hit) /
                                     static_cast<double>(tasks.size()));
  }
  return out;
}

double mesh_level_accuracy(const ImitatorParams& params, const std::vector<LabeledMesh>& meshes,
                           const TrainConfig& config) {
  int hit = 0;
  for (const LabeledMesh& lm : meshes) {
    const PredictionVector p =
        predict_mesh(params, lm.mesh, config.query_walks, config.walk_length,
                     split_seed(config.seed, vertex_content_hash(lm.mesh)));
    if (argmax(p) == lm.label) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(meshes.size());
}

}  // namespace

TrainedImitator train_victim_net(const Dataset& dataset, const TrainConfig& config) {
  if (config.loss != LossKind::CrossEntropy) {
    throw ConfigError("victim training requires the cross-entropy loss");
  }
  const int classes = dataset.num_classes();
  TrainedImitator trained =
      train_walk_net(dataset.train, classes, config,
                     [&](int i) { return one_hot(dataset.train[i].label, classes); });
  if (config.epochs > 0) {
    const double acc = mesh_level_accuracy(trained.params, dataset.train, config);
    if (acc < 0.6) {
      throw NonConvergence("victim train accuracy " + std::to_string(acc) + " below 0.6");
    }
  }
  return trained;
}

std::shared_ptr<Victim> wrap_walk_victim(const TrainedImitator& trained,
                                         const TrainConfig& config,
                                         const std::vector<std::string>& class_names) {
  return make_walk_victim(trained.params, config.query_walks, config.walk_length,
                          split_seed(config.seed, 303), class_names);
}

TrainedImitator train_imitator(const std::vector<LabeledMesh>& train_meshes,
                               const std::vector<PredictionVector>& targets, int classes,
                               const TrainConfig& config) {
  if (config.loss != LossKind::KLD) {
    throw ConfigError("imitator training requires the KLD loss");
  }
  if (targets.size() != train_meshes.size()) {
    throw ConfigError("one target prediction vector per train mesh required");
  }
  for (const PredictionVector& t : targets) validate_prediction(t);
  TrainedImitator trained = train_walk_net(train_meshes, classes, config,
                                           [&](int i) { return targets[i]; });
  if (config.epochs > 1) {
    const double first = trained.log.epoch_loss.front();
    const double last = trained.log.epoch_loss.back();
    // constant-target distillation can start near zero; only flag real stalls
    if (first > 1e-3 && last > 0.5 * first) {
      throw NonConvergence("imitator KLD did not drop below 50% of its initial value");
    }
  }
  return trained;
}

FaceFeatParams train_face_victim(const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  if (config.loss != LossKind::CrossEntropy) {
    throw ConfigError("victim training requires the cross-entropy loss");
  }
  const int classes = dataset.num_classes();
  FaceFeatParams params = init_face_params(config.hidden, classes, split_seed(config.seed, 404));
  Adam<FaceFeatParams> opt(params, config.learning_rate);
  Rng rng(split_seed(config.seed, 505));

  std::vector<int> order(dataset.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      const std::size_t batch_end = std::min(cursor + config.batch_size, order.size());
      FaceFeatParams grads = zeros_like(params);
      const double inv_n = 1.0 / static_cast<double>(batch_end - cursor);
      for (; cursor < batch_end; ++cursor) {
        const LabeledMesh& lm = dataset.train[order[cursor]];
        Mesh jittered = lm.mesh;
        if (config.augment_jitter > 0.0) {
          for (Vec3& v : jittered.vertices) {
            v += config.augment_jitter * Vec3(rng.normal(), rng.normal(), rng.normal());
          }
        }
        const FaceFeatParams g =
            face_net_backward(params, jittered, one_hot(lm.label, classes));
        add_scaled(grads, g, inv_n);
      }
      opt.step(params, grads);
    }
  }
  if (config.epochs > 0) {
    int hit = 0;
    for (const LabeledMesh& lm : dataset.train) {
      if (argmax(face_net_predict(params, lm.mesh)) == lm.label) ++hit;
    }
    const double acc = static_cast<double>(hit) / static_cast<double>(dataset.train.size());
    if (acc < 0.6) {
      throw NonConvergence("face victim train accuracy " + std::to_string(acc) + " below 0.6");
    }
  }
  return params;
}

}  // namespace meshadv
