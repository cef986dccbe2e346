#include "meshadv/eval.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "meshadv/mesh_io.hpp"

namespace meshadv {

double accuracy(const Victim& victim, const std::vector<Mesh>& meshes,
                const std::vector<int>& labels) {
  if (meshes.empty() || meshes.size() != labels.size()) {
    throw EmptyInput("accuracy needs a non-empty mesh list with matching labels");
  }
  int hit = 0;
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    if (argmax(victim.query(meshes[i])) == labels[i]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(meshes.size());
}

namespace {

void require_same_topology(const Mesh& a, const Mesh& b) {
  if (a.num_vertices() != b.num_vertices() || a.faces != b.faces) {
    throw TopologyMismatch("meshes differ in vertex count or face list");
  }
}

}  // namespace

double l2_distortion(const Mesh& original, const Mesh& attacked) {
  require_same_topology(original, attacked);
  const Vec3 c = centroid(original);
  const double r = bounding_radius(original, c);
  if (r < 1e-12) throw DegenerateMesh("original mesh has zero radius");
  double sum = 0.0;
  for (int v = 0; v < original.num_vertices(); ++v) {
    sum += (attacked.vertices[v] - original.vertices[v]).norm() / r;
  }
  return sum / original.num_vertices();
}

HeatMap heatmap(const Mesh& original, const Mesh& attacked) {
  require_same_topology(original, attacked);
  HeatMap heat;
  heat.values.resize(original.num_vertices());
  double max_disp = 0.0;
  for (int v = 0; v < original.num_vertices(); ++v) {
    heat.values[v] = (attacked.vertices[v] - original.vertices[v]).norm();
    max_disp = std::max(max_disp, heat.values[v]);
  }
  if (max_disp > 0.0) {
    for (double& x : heat.values) x /= max_disp;
  }
  return heat;
}

void export_heatmap(const Mesh& mesh, const HeatMap& heat,
                    const std::filesystem::path& ply_path) {
  if (static_cast<int>(heat.values.size()) != mesh.num_vertices()) {
    throw DimensionMismatch("heat map size does not match vertex count");
  }
  PlyAttributes attrs;
  attrs.quality = heat.values;
  attrs.color.resize(heat.values.size());
  for (std::size_t i = 0; i < heat.values.size(); ++i) {
    const double v = heat.values[i];
    attrs.color[i] = {static_cast<std::uint8_t>(std::lround(255.0 * v)), 0,
                      static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - v)))};
  }
  save_ply(mesh, ply_path, &attrs);

  std::filesystem::path csv_path = ply_path;
  csv_path.replace_extension(".csv");
  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot open " + csv_path.string() + " for writing");
  csv << "vertex_index,value\n";
  char buf[32];
  for (std::size_t i = 0; i < heat.values.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.12g", heat.values[i]);
    csv << i << ',' << buf << '\n';
  }
}

EvalReport evaluate_attack(const Victim& victim, const std::vector<LabeledMesh>& originals,
                           const std::vector<AttackResult>& results) {
  if (originals.empty() || originals.size() != results.size()) {
    throw EmptyInput("evaluate_attack needs matching originals and results");
  }
  EvalReport report;
  report.class_names = victim.class_names();
  const int classes = victim.num_classes();
  std::vector<double> class_l2(classes, 0.0);
  std::vector<int> class_n(classes, 0);
  int pre_hit = 0, post_hit = 0, successes = 0;
  double l2_sum = 0.0;

  for (std::size_t i = 0; i < originals.size(); ++i) {
    const LabeledMesh& lm = originals[i];
    const AttackResult& res = results[i];
    EvalRow row;
    row.source_id = lm.source_id;
    row.label = lm.label;
    row.pre_predicted = argmax(victim.query(lm.mesh));
    row.post_predicted = argmax(victim.query(res.attacked_mesh));
    row.l2 = l2_distortion(lm.mesh, res.attacked_mesh);
    row.attack_success = res.success;
    row.iterations = res.iterations_used;
    if (row.pre_predicted == lm.label) ++pre_hit;
    if (row.post_predicted == lm.label) ++post_hit;
    if (res.success) {
      ++successes;
      l2_sum += row.l2;
      class_l2[lm.label] += row.l2;
      ++class_n[lm.label];
    }
    report.rows.push_back(std::move(row));
  }

  const double n = static_cast<double>(originals.size());
  report.pre_attack_accuracy = pre_hit / n;
  report.post_attack_accuracy = post_hit / n;
  report.success_rate = successes / n;
  report.mean_l2 = successes > 0 ? l2_sum / successes : 0.0;
  report.per_class_l2.resize(classes);
  for (int c = 0; c < classes; ++c) {
    report.per_class_l2[c] = class_n[c] > 0 ? class_l2[c] / class_n[c] : 0.0;
  }
  return report;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  out << "# L2 distortion = mean per-vertex Euclidean displacement, both meshes in the\n"
         "# original's unit-sphere frame; mean_l2 aggregates successful attacks only.\n";
  char line[160];
  std::snprintf(line, sizeof(line),
                "pre-attack accuracy  %.4f\npost-attack accuracy %.4f\n"
                "success rate         %.4f\nmean L2 distortion   %.6f\n",
                report.pre_attack_accuracy, report.post_attack_accuracy, report.success_rate,
                report.mean_l2);
  out << line;
  out << "\nclass            mean L2\n";
  for (std::size_t c = 0; c < report.per_class_l2.size(); ++c) {
    const std::string name = c < report.class_names.size() ? report.class_names[c] : "?";
    std::snprintf(line, sizeof(line), "%-16s %.6f\n", name.c_str(), report.per_class_l2[c]);
    out << line;
  }
  return out.str();
}

void save_report_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", report.pre_attack_accuracy);
  out << "# pre_attack_accuracy " << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.12g", report.post_attack_accuracy);
  out << "# post_attack_accuracy " << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.12g", report.mean_l2);
  out << "# mean_l2 " << buf << '\n';
  out << "source_id,label,pre_predicted,post_predicted,l2,success,iterations\n";
  for (const EvalRow& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%.12g", row.l2);
    out << row.source_id << ',' << row.label << ',' << row.pre_predicted << ','
        << row.post_predicted << ',' << buf << ',' << (row.attack_success ? 1 : 0) << ','
        << row.iterations << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<AttackResult> attack_all(const std::vector<LabeledMesh>& meshes,
                                     const ImitatorParams& imitator, const AttackConfig& config,
                                     int jobs) {
  std::vector<AttackResult> results(meshes.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= meshes.size()) break;
      AttackConfig cfg = config;
      cfg.seed = split_seed(config.seed, i);  // per-mesh seed, independent of job count
      results[i] = attack(meshes[i].mesh, meshes[i].label, imitator, cfg);
    }
  };
  const int n = std::max(1, jobs);
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

std::vector<std::vector<double>> cross_attack_matrix(
    const std::vector<const Victim*>& victims, const std::vector<const ImitatorParams*>& imitators,
    const std::vector<LabeledMesh>& test_set, const AttackConfig& config, int jobs) {
  if (victims.empty() || imitators.empty() || test_set.empty()) {
    throw ConfigError("cross-attack matrix needs victims, imitators and a test set");
  }
  for (const Victim* v : victims) {
    for (const ImitatorParams* im : imitators) {
      if (v->num_classes() != im->spec.classes) {
        throw ConfigError("victim/imitator class count mismatch");
      }
    }
  }
  std::vector<std::vector<double>> matrix(victims.size(),
                                          std::vector<double>(imitators.size(), 0.0));
  std::vector<int> labels;
  labels.reserve(test_set.size());
  for (const LabeledMesh& lm : test_set) labels.push_back(lm.label);

  for (std::size_t j = 0; j < imitators.size(); ++j) {
    AttackConfig cfg = config;
    cfg.seed = split_seed(config.seed, 9000 + j);
    const std::vector<AttackResult> results = attack_all(test_set, *imitators[j], cfg, jobs);
    std::vector<Mesh> attacked;
    attacked.reserve(results.size());
    for (const AttackResult& r : results) attacked.push_back(r.attacked_mesh);
    for (std::size_t i = 0; i < victims.size(); ++i) {
      matrix[i][j] = accuracy(*victims[i], attacked, labels);
    }
  }
  return matrix;
}

}  // namespace meshadv
