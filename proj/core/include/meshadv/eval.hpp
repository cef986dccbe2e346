#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "meshadv/attack.hpp"
#include "meshadv/mesh.hpp"
#include "meshadv/victim.hpp"

namespace meshadv {

// Fraction of meshes whose victim argmax equals the label.
double accuracy(const Victim& victim, const std::vector<Mesh>& meshes,
                const std::vector<int>& labels);

// Mean per-vertex Euclidean displacement after mapping both meshes into the
// original's unit-sphere frame (original centroid and radius), so only attack
// displacement is measured.
double l2_distortion(const Mesh& original, const Mesh& attacked);

/// Per-vertex displacement magnitudes scaled so the largest is 1.
struct HeatMap {
  std::vector<double> values;
};

HeatMap heatmap(const Mesh& original, const Mesh& attacked);

// Ascii PLY with a per-vertex "quality" property and a red-blue color ramp
// (red = 1, blue = 0), plus a CSV (vertex_index,value) next to it.
void export_heatmap(const Mesh& mesh, const HeatMap& heat, const std::filesystem::path& ply_path);

struct EvalRow {
  std::string source_id;
  int label = 0;
  int pre_predicted = 0;
  int post_predicted = 0;
  double l2 = 0.0;
  bool attack_success = false;
  int iterations = 0;
};

struct EvalReport {
  double pre_attack_accuracy = 0.0;
  double post_attack_accuracy = 0.0;
  double mean_l2 = 0.0;             // over successfully attacked meshes
  std::vector<double> per_class_l2;
  double success_rate = 0.0;
  std::vector<EvalRow> rows;
  std::vector<std::string> class_names;
};

EvalReport evaluate_attack(const Victim& victim, const std::vector<LabeledMesh>& originals,
                           const std::vector<AttackResult>& results);

// Human-readable table; the header records the distortion definition.
std::string format_report(const EvalReport& report);
void save_report_csv(const EvalReport& report, const std::filesystem::path& path);

// Entry (i, j) = post-attack accuracy of victim i on meshes attacked through
// imitator j. Victims and imitators must share the class count.
std::vector<std::vector<double>> cross_attack_matrix(
    const std::vector<const Victim*>& victims, const std::vector<const ImitatorParams*>& imitators,
    const std::vector<LabeledMesh>& test_set, const AttackConfig& config, int jobs = 1);

// Runs the attack over a split in parallel; result order matches input order
// and is independent of the job count.
std::vector<AttackResult> attack_all(const std::vector<LabeledMesh>& meshes,
                                     const ImitatorParams& imitator, const AttackConfig& config,
                                     int jobs = 1);

}  // namespace meshadv
