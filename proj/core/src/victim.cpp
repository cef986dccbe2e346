#include "meshadv/victim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "meshadv/rng.hpp"
#include "meshadv/walk.hpp"

namespace meshadv {

PredictionVector predict_mesh(const ImitatorParams& params, const Mesh& mesh, int n_walks,
                              int walk_length, std::uint64_t seed) {
  const int length = walk_length > 0 ? walk_length : default_walk_length(mesh);
  Rng rng(seed);
  PredictionVector sum = VectorXd::Zero(params.spec.classes);
  for (int i = 0; i < n_walks; ++i) {
    const Walk walk = extract_walk(mesh, length, rng);
    sum += forward(params, walk.coords).prediction;
  }
  return sum / n_walks;
}

namespace {

class WalkVictim final : public Victim {
 public:
  WalkVictim(ImitatorParams params, int n_walks, int walk_length, std::uint64_t seed,
             std::vector<std::string> class_names, std::string name)
      : params_(std::move(params)),
        n_walks_(n_walks),
        walk_length_(walk_length),
        seed_(seed),
        class_names_(std::move(class_names)),
        name_(std::move(name)) {}

  PredictionVector query(const Mesh& mesh) const override {
    // per-mesh deterministic walk seed from the vertex content
    const std::uint64_t walk_seed = split_seed(seed_, vertex_content_hash(mesh));
    return predict_mesh(params_, mesh, n_walks_, walk_length_, walk_seed);
  }
  const std::string& name() const override { return name_; }
  int num_classes() const override { return params_.spec.classes; }
  const std::vector<std::string>& class_names() const override { return class_names_; }

 private:
  ImitatorParams params_;
  int n_walks_;
  int walk_length_;
  std::uint64_t seed_;
  std::vector<std::string> class_names_;
  std::string name_;
};

class FaceVictim final : public Victim {
 public:
  FaceVictim(FaceFeatParams params, std::vector<std::string> class_names, std::string name)
      : params_(std::move(params)), class_names_(std::move(class_names)), name_(std::move(name)) {}

  PredictionVector query(const Mesh& mesh) const override {
    return face_net_predict(params_, mesh);
  }
  const std::string& name() const override { return name_; }
  int num_classes() const override { return params_.classes; }
  const std::vector<std::string>& class_names() const override { return class_names_; }

 private:
  FaceFeatParams params_;
  std::vector<std::string> class_names_;
  std::string name_;
};

class TableVictim final : public Victim {
 public:
  TableVictim(const std::vector<Mesh>& meshes, const std::vector<PredictionVector>& predictions,
              std::vector<std::string> class_names)
      : class_names_(std::move(class_names)), name_("table-victim") {
    if (meshes.size() != predictions.size()) {
      throw DimensionMismatch("table victim: meshes/predictions size mismatch");
    }
    for (std::size_t i = 0; i < meshes.size(); ++i) {
      table_[vertex_content_hash(meshes[i])] = predictions[i];
    }
  }

  PredictionVector query(const Mesh& mesh) const override {
    const auto found = table_.find(vertex_content_hash(mesh));
    if (found == table_.end()) throw ConfigError("table victim: unknown mesh");
    return found->second;
  }
  const std::string& name() const override { return name_; }
  int num_classes() const override { return static_cast<int>(class_names_.size()); }
  const std::vector<std::string>& class_names() const override { return class_names_; }

 private:
  std::unordered_map<std::uint64_t, PredictionVector> table_;
  std::vector<std::string> class_names_;
  std::string name_;
};

}  // namespace

std::shared_ptr<Victim> make_walk_victim(ImitatorParams params, int n_walks, int walk_length,
                                         std::uint64_t seed, std::vector<std::string> class_names,
                                         std::string name) {
  return std::make_shared<WalkVictim>(std::move(params), n_walks, walk_length, seed,
                                      std::move(class_names), std::move(name));
}

std::shared_ptr<Victim> make_face_victim(FaceFeatParams params,
                                         std::vector<std::string> class_names, std::string name) {
  return std::make_shared<FaceVictim>(std::move(params), std::move(class_names), std::move(name));
}

std::shared_ptr<Victim> make_table_victim(const std::vector<Mesh>& meshes,
                                          const std::vector<PredictionVector>& predictions,
                                          std::vector<std::string> class_names) {
  return std::make_shared<TableVictim>(meshes, predictions, std::move(class_names));
}

FaceFeatParams init_face_params(int hidden, int classes, std::uint64_t seed) {
  if (classes < 2) throw ConfigError("face net needs >= 2 classes");
  Rng rng(seed);
  auto glorot = [&rng](int rows, int cols) {
    const double lim = std::sqrt(6.0 / (rows + cols));
    MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-lim, lim);
    }
    return m;
  };
  FaceFeatParams p;
  p.hidden = hidden;
  p.classes = classes;
  p.m1 = {glorot(hidden, 7), VectorXd::Zero(hidden)};
  p.m2 = {glorot(hidden, hidden), VectorXd::Zero(hidden)};
  p.out = {glorot(classes, hidden), VectorXd::Zero(classes)};
  return p;
}

FaceFeatParams zeros_like(const FaceFeatParams& params) {
  FaceFeatParams z = params;
  visit_tensors(z, [](const std::string&, auto& t) { t.setZero(); });
  return z;
}

MatrixXd face_features(const Mesh& mesh) {
  const int nf = mesh.num_faces();
  MatrixXd feats(nf, 7);
  for (int i = 0; i < nf; ++i) {
    const Face& f = mesh.faces[i];
    const Vec3& p0 = mesh.vertices[f[0]];
    const Vec3& p1 = mesh.vertices[f[1]];
    const Vec3& p2 = mesh.vertices[f[2]];
    const Vec3 center = (p0 + p1 + p2) / 3.0;
    const Vec3 cross = (p1 - p0).cross(p2 - p0);
    const double norm = cross.norm();
    const Vec3 normal = norm > 1e-14 ? Vec3(cross / norm) : Vec3::Zero();
    feats.row(i) << center.x(), center.y(), center.z(), normal.x(), normal.y(), normal.z(),
        0.5 * norm;
  }
  return feats;
}

namespace {

struct FaceNetTrace {
  MatrixXd feats, a1, h1, a2, h2;  // per-face rows
  VectorXd pooled, logits;
  PredictionVector prediction;
};

FaceNetTrace face_net_forward(const FaceFeatParams& p, const Mesh& mesh) {
  FaceNetTrace tr;
  tr.feats = face_features(mesh);
  tr.a1 = (tr.feats * p.m1.W.transpose()).rowwise() + p.m1.b.transpose();
  tr.h1 = tr.a1.cwiseMax(0.0);
  tr.a2 = (tr.h1 * p.m2.W.transpose()).rowwise() + p.m2.b.transpose();
  tr.h2 = tr.a2.cwiseMax(0.0);
  tr.pooled = tr.h2.colwise().mean().transpose();
  tr.logits = p.out.W * tr.pooled + p.out.b;
  const VectorXd shifted = (tr.logits.array() - tr.logits.maxCoeff()).exp();
  tr.prediction = shifted / shifted.sum();
  return tr;
}

}  // namespace

PredictionVector face_net_predict(const FaceFeatParams& params, const Mesh& mesh) {
  return face_net_forward(params, mesh).prediction;
}

FaceFeatParams face_net_backward(const FaceFeatParams& params, const Mesh& mesh,
                                 const PredictionVector& ref, double* loss_out) {
  const FaceNetTrace tr = face_net_forward(params, mesh);
  if (loss_out) *loss_out = loss_value(LossKind::CrossEntropy, ref, tr.prediction);
  FaceFeatParams g = zeros_like(params);
  const VectorXd dlogits = tr.prediction - ref;
  g.out.W = dlogits * tr.pooled.transpose();
  g.out.b = dlogits;
  const VectorXd dpooled = params.out.W.transpose() * dlogits;
  const double inv_f = 1.0 / static_cast<double>(tr.feats.rows());
  const MatrixXd dh2 = MatrixXd::Ones(tr.feats.rows(), 1) * (dpooled.transpose() * inv_f);
  const MatrixXd da2 = dh2.cwiseProduct((tr.a2.array() > 0.0).cast<double>().matrix());
  g.m2.W = da2.transpose() * tr.h1;
  g.m2.b = da2.colwise().sum().transpose();
  const MatrixXd dh1 = da2 * params.m2.W;
  const MatrixXd da1 = dh1.cwiseProduct((tr.a1.array() > 0.0).cast<double>().matrix());
  g.m1.W = da1.transpose() * tr.feats;
  g.m1.b = da1.colwise().sum().transpose();
  return g;
}

void save_face_net(const FaceFeatParams& params, const std::filesystem::path& path) {
  TensorFile file;
  file.manifest = {
      {"version", "1"},
      {"kind", "face-net"},
      {"hidden", std::to_string(params.hidden)},
      {"classes", std::to_string(params.classes)},
      {"loss", "cross-entropy"},
  };
  visit_tensors(const_cast<FaceFeatParams&>(params), [&](const std::string& name, auto& t) {
    file.tensors.emplace_back(name, std::vector<double>(t.data(), t.data() + t.size()));
  });
  write_tensor_file(file, path);
}

FaceFeatParams load_face_net(const std::filesystem::path& path) {
  const TensorFile file = read_tensor_file(path);
  if (file.value("kind") != "face-net") throw ParseError("not a face-net checkpoint");
  FaceFeatParams params =
      init_face_params(std::stoi(file.value("hidden")), std::stoi(file.value("classes")), 0);
  std::size_t cursor = 0;
  visit_tensors(params, [&](const std::string& name, auto& t) {
    if (cursor >= file.tensors.size() || file.tensors[cursor].first != name) {
      throw ParseError("checkpoint tensor order mismatch at " + name);
    }
    const auto& data = file.tensors[cursor].second;
    if (static_cast<Eigen::Index>(data.size()) != t.size()) {
      throw ParseError("checkpoint tensor size mismatch for " + name);
    }
    std::copy(data.begin(), data.end(), t.data());
    ++cursor;
  });
  return params;
}

std::vector<PredictionVector> query_all(const Victim& victim, const std::vector<Mesh>& meshes) {
  std::vector<PredictionVector> out;
  out.reserve(meshes.size());
  for (const Mesh& m : meshes) out.push_back(victim.query(m));
  return out;
}

void save_predictions(const std::vector<std::string>& source_ids,
                      const std::vector<PredictionVector>& predictions,
                      const std::filesystem::path& path) {
  if (source_ids.size() != predictions.size()) {
    throw DimensionMismatch("source_ids/predictions size mismatch");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  char buf[32];
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    out << source_ids[i];
    for (int k = 0; k < predictions[i].size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.12g", predictions[i][k]);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::pair<std::vector<std::string>, std::vector<PredictionVector>> load_predictions(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> ids;
  std::vector<PredictionVector> preds;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream s(line);
    std::string field;
    if (!std::getline(s, field, ',')) throw ParseError("malformed prediction line: " + line);
    ids.push_back(field);
    std::vector<double> vals;
    while (std::getline(s, field, ',')) vals.push_back(std::stod(field));
    if (vals.empty()) throw ParseError("prediction line without probabilities: " + line);
    preds.push_back(Eigen::Map<VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())));
  }
  return {std::move(ids), std::move(preds)};
}

double agreement(const ImitatorParams& imitator, const Victim& victim,
                 const std::vector<Mesh>& meshes, int n_walks, std::uint64_t seed) {
  if (meshes.empty()) return 0.0;
  int match = 0;
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    const PredictionVector mine =
        predict_mesh(imitator, meshes[i], n_walks, 0, split_seed(seed, i));
    if (argmax(mine) == argmax(victim.query(meshes[i]))) ++match;
  }
  return static_cast<double>(match) / static_cast<double>(meshes.size());
}

}  // namespace meshadv
