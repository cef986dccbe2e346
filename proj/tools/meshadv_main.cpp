// meshadv: dataset generation, victim training, black-box querying, imitator
// distillation, walk-based adversarial attacks and evaluation, end to end.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "meshadv/attack.hpp"
#include "meshadv/checkpoint.hpp"
#include "meshadv/eval.hpp"
#include "meshadv/mesh_io.hpp"
#include "meshadv/synth.hpp"
#include "meshadv/train.hpp"

namespace fs = std::filesystem;
using namespace meshadv;

namespace {

// all outputs are written to a sibling temp path first, then renamed into
// place, so a crash never leaves a half-written artifact behind
template <typename F>
void atomic_file(const fs::path& path, F&& writer) {
  fs::path tmp = path;
  tmp += ".tmp";
  writer(tmp);
  fs::rename(tmp, path);
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  atomic_file(path, [&](const fs::path& tmp) {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << text;
    if (!out) throw IoError("write failed: " + tmp.string());
  });
}

// fully resolved settings (defaults included) for the subcommand that ran
void write_resolved_config(CLI::App* sub, const fs::path& dir) {
  fs::create_directories(dir);
  write_text_atomic(dir / "config.txt",
                    "[" + sub->get_name() + "]\n" + sub->config_to_str(true, false));
}

std::vector<LabeledMesh> pick_split(const Dataset& ds, const std::string& split) {
  if (split == "train") return ds.train;
  if (split == "test") return ds.test;
  if (split == "all") {
    std::vector<LabeledMesh> all = ds.train;
    all.insert(all.end(), ds.test.begin(), ds.test.end());
    return all;
  }
  throw ConfigError("unknown split '" + split + "' (train, test or all)");
}

// reconstructs a queryable victim from either checkpoint flavor
std::shared_ptr<Victim> load_victim(const fs::path& path,
                                    const std::vector<std::string>& class_names,
                                    int query_walks, int walk_length) {
  const TensorFile file = read_tensor_file(path);
  const std::string kind = file.value("kind");
  if (kind == "imitator") {
    auto [params, meta] = load_imitator(path);
    return make_walk_victim(std::move(params), query_walks, walk_length,
                            split_seed(meta.seed, 303), class_names);
  }
  if (kind == "face-net") {
    return make_face_victim(load_face_net(path), class_names);
  }
  throw ParseError("unrecognized checkpoint kind '" + kind + "' in " + path.string());
}

void add_train_flags(CLI::App* sub, TrainConfig& cfg) {
  sub->add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
  sub->add_option("--walks-per-mesh", cfg.walks_per_mesh_per_epoch,
                  "Walks drawn per mesh per epoch")
      ->capture_default_str();
  sub->add_option("--walk-length", cfg.walk_length, "Walk length (0: min(200, |V|))")
      ->capture_default_str();
  sub->add_option("--lr", cfg.learning_rate, "Adam learning rate")->capture_default_str();
  sub->add_option("--batch-size", cfg.batch_size, "Walks per optimizer step")
      ->capture_default_str();
  sub->add_option("--lift1", cfg.lift1, "First lift layer width")->capture_default_str();
  sub->add_option("--hidden", cfg.hidden, "Hidden / GRU state width")->capture_default_str();
  sub->add_option("--rnn-layers", cfg.rnn_layers, "Stacked GRU layers")->capture_default_str();
  sub->add_option("--augment-jitter", cfg.augment_jitter,
                  "Gaussian walk-coordinate noise during training")
      ->capture_default_str();
  sub->add_option("--query-walks", cfg.query_walks, "Walks averaged per query")
      ->capture_default_str();
  sub->add_option("--seed", cfg.seed, "Training seed")->capture_default_str();
}

struct AttackedSet {
  std::vector<LabeledMesh> originals;
  std::vector<AttackResult> results;  // attacked_mesh, success, iterations only
};

// pairs the split's meshes with the attack directory's outputs via summary.csv
AttackedSet load_attacked(const std::vector<LabeledMesh>& split, const fs::path& dir) {
  std::ifstream summary(dir / "summary.csv");
  if (!summary) throw IoError("cannot read " + (dir / "summary.csv").string());
  std::string line;
  std::getline(summary, line);  // header
  std::map<std::string, std::pair<bool, int>> outcome;
  while (std::getline(summary, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, success, iters;
    std::getline(ss, id, ',');
    std::getline(ss, success, ',');
    std::getline(ss, iters, ',');
    outcome[id] = {success == "1", std::stoi(iters)};
  }
  AttackedSet set;
  for (const LabeledMesh& lm : split) {
    auto it = outcome.find(lm.source_id);
    if (it == outcome.end()) continue;  // mesh was not attacked
    AttackResult r;
    r.attacked_mesh = load_mesh(dir / (lm.source_id + ".off"), MeshFormat::OFF);
    r.success = it->second.first;
    r.iterations_used = it->second.second;
    set.originals.push_back(lm);
    set.results.push_back(std::move(r));
  }
  if (set.originals.empty()) {
    throw EmptyInput("no attacked meshes in " + dir.string() + " match the chosen split");
  }
  return set;
}

int run(int argc, char** argv) {
  CLI::App app{"Black-box adversarial attacks on mesh classifiers via walk imitation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key/value config file");

  // ---- gen-data ----
  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic shape dataset");
  std::string gen_out;
  DatasetConfig gen_cfg;
  gen->add_option("--out", gen_out, "Dataset output directory")->required();
  gen->add_option("--per-class", gen_cfg.per_class, "Meshes per class")->capture_default_str();
  gen->add_option("--train-fraction", gen_cfg.train_fraction, "Train split fraction")
      ->capture_default_str();
  gen->add_option("--resolution", gen_cfg.resolution, "Tessellation density")
      ->capture_default_str();
  gen->add_option("--jitter", gen_cfg.jitter, "Vertex jitter before normalization")
      ->capture_default_str();
  gen->add_option("--seed", gen_cfg.seed, "Dataset seed")->capture_default_str();
  gen->callback([&] {
    if (fs::exists(gen_out)) throw ConfigError("output directory exists: " + gen_out);
    const Dataset ds = make_dataset(gen_cfg);
    const fs::path tmp = gen_out + ".tmp";
    save_dataset(ds, tmp, gen_cfg);
    fs::rename(tmp, gen_out);
    write_resolved_config(gen, gen_out);
    std::cout << "wrote " << ds.train.size() << " train / " << ds.test.size()
              << " test meshes to " << gen_out << "\n";
  });

  // ---- train-victim ----
  auto* tv = app.add_subcommand("train-victim", "Train a classifier to be attacked");
  std::string tv_data, tv_out, tv_kind = "walk";
  TrainConfig tv_cfg;
  tv->add_option("--data", tv_data, "Dataset directory")->required();
  tv->add_option("--out", tv_out, "Checkpoint output path")->required();
  tv->add_option("--kind", tv_kind, "Victim flavor: walk or face")
      ->check(CLI::IsMember({"walk", "face"}))
      ->capture_default_str();
  add_train_flags(tv, tv_cfg);
  tv->callback([&] {
    const Dataset ds = load_dataset(tv_data);
    fs::create_directories(fs::path(tv_out).parent_path().empty()
                               ? fs::path(".")
                               : fs::path(tv_out).parent_path());
    if (tv_kind == "walk") {
      tv_cfg.loss = LossKind::CrossEntropy;
      const TrainedImitator trained = train_victim_net(ds, tv_cfg);
      atomic_file(tv_out, [&](const fs::path& tmp) {
        save_imitator(trained.params, {"cross-entropy", tv_cfg.seed}, tmp);
      });
      std::cout << "final train loss " << trained.log.epoch_loss.back() << ", accuracy "
                << trained.log.epoch_accuracy.back() << "\n";
    } else {
      const FaceFeatParams params = train_face_victim(ds, tv_cfg);
      atomic_file(tv_out, [&](const fs::path& tmp) { save_face_net(params, tmp); });
    }
    write_resolved_config(tv, fs::path(tv_out).parent_path());
    std::cout << "wrote checkpoint " << tv_out << "\n";
  });

  // ---- query ----
  auto* qr = app.add_subcommand("query", "Record the victim's prediction vectors");
  std::string qr_data, qr_victim, qr_out, qr_split = "train";
  int qr_walks = 8, qr_walk_length = 0;
  qr->add_option("--data", qr_data, "Dataset directory")->required();
  qr->add_option("--victim", qr_victim, "Victim checkpoint")->required();
  qr->add_option("--out", qr_out, "Prediction file output path")->required();
  qr->add_option("--split", qr_split, "Split to query: train, test or all")
      ->capture_default_str();
  qr->add_option("--query-walks", qr_walks, "Walks averaged per query (walk victims)")
      ->capture_default_str();
  qr->add_option("--walk-length", qr_walk_length, "Query walk length (0: min(200, |V|))")
      ->capture_default_str();
  qr->callback([&] {
    const Dataset ds = load_dataset(qr_data);
    const auto split = pick_split(ds, qr_split);
    auto victim = load_victim(qr_victim, ds.class_names, qr_walks, qr_walk_length);
    std::vector<Mesh> meshes;
    std::vector<std::string> ids;
    for (const LabeledMesh& lm : split) {
      meshes.push_back(lm.mesh);
      ids.push_back(lm.source_id);
    }
    const auto preds = query_all(*victim, meshes);
    atomic_file(qr_out, [&](const fs::path& tmp) { save_predictions(ids, preds, tmp); });
    write_resolved_config(qr, fs::path(qr_out).parent_path());
    std::cout << "wrote " << preds.size() << " prediction vectors to " << qr_out << "\n";
  });

  // ---- train-imitator ----
  auto* ti = app.add_subcommand("train-imitator",
                                "Distill the queried predictions into an imitating network");
  std::string ti_data, ti_preds, ti_out;
  TrainConfig ti_cfg;
  ti->add_option("--data", ti_data, "Dataset directory")->required();
  ti->add_option("--predictions", ti_preds, "Prediction file from the query step")->required();
  ti->add_option("--out", ti_out, "Checkpoint output path")->required();
  add_train_flags(ti, ti_cfg);
  ti->callback([&] {
    const Dataset ds = load_dataset(ti_data);
    const auto [ids, preds] = load_predictions(ti_preds);
    std::map<std::string, const PredictionVector*> by_id;
    for (std::size_t i = 0; i < ids.size(); ++i) by_id[ids[i]] = &preds[i];
    std::vector<LabeledMesh> meshes;
    std::vector<PredictionVector> targets;
    for (const LabeledMesh& lm : ds.train) {
      auto it = by_id.find(lm.source_id);
      if (it == by_id.end()) continue;
      meshes.push_back(lm);
      targets.push_back(*it->second);
    }
    if (meshes.empty()) throw EmptyInput("no predictions match the train split");
    ti_cfg.loss = LossKind::KLD;
    const TrainedImitator trained =
        train_imitator(meshes, targets, ds.num_classes(), ti_cfg);
    atomic_file(ti_out, [&](const fs::path& tmp) {
      save_imitator(trained.params, {"kld", ti_cfg.seed}, tmp);
    });
    write_resolved_config(ti, fs::path(ti_out).parent_path());
    std::cout << "distilled " << meshes.size() << " meshes; final KLD "
              << trained.log.epoch_loss.back() << "; wrote " << ti_out << "\n";
  });

  // ---- attack ----
  auto* at = app.add_subcommand("attack", "Attack a split through the imitating network");
  std::string at_data, at_imitator, at_out, at_split = "test";
  AttackConfig at_cfg;
  int at_target = -1, at_jobs = 1;
  at->add_option("--data", at_data, "Dataset directory")->required();
  at->add_option("--imitator", at_imitator, "Imitator checkpoint")->required();
  at->add_option("--out", at_out, "Output directory for attacked meshes and logs")->required();
  at->add_option("--split", at_split, "Split to attack")->capture_default_str();
  at->add_option("--alpha", at_cfg.alpha, "Vertex step scale")->capture_default_str();
  at->add_option("--walk-length", at_cfg.walk_length, "Attack walk length (0: min(200, |V|))")
      ->capture_default_str();
  at->add_option("--stop-k", at_cfg.stop_k, "Consecutive hits declaring success")
      ->capture_default_str();
  at->add_option("--max-iterations", at_cfg.max_iterations, "Iteration budget per mesh")
      ->capture_default_str();
  at->add_option("--seed", at_cfg.seed, "Attack seed")->capture_default_str();
  at->add_option("--target-class", at_target,
                 "Targeted attack toward this class (-1: untargeted)")
      ->capture_default_str();
  at->add_option("--jobs", at_jobs, "Parallel attack workers")->capture_default_str();
  at->callback([&] {
    const Dataset ds = load_dataset(at_data);
    const auto split = pick_split(ds, at_split);
    auto [params, meta] = load_imitator(at_imitator);
    std::vector<AttackResult> results;
    if (at_target < 0) {
      results = attack_all(split, params, at_cfg, at_jobs);
    } else {
      results.resize(split.size());
      for (std::size_t i = 0; i < split.size(); ++i) {
        AttackConfig cfg = at_cfg;
        cfg.seed = split_seed(at_cfg.seed, i);
        results[i] = targeted_attack(split[i].mesh, at_target, params, cfg);
      }
    }
    fs::create_directories(at_out);
    std::ostringstream summary;
    summary << "source_id,success,iterations\n";
    int successes = 0;
    for (std::size_t i = 0; i < split.size(); ++i) {
      const fs::path mesh_path = fs::path(at_out) / (split[i].source_id + ".off");
      atomic_file(mesh_path, [&](const fs::path& tmp) {
        save_mesh(results[i].attacked_mesh, tmp, MeshFormat::OFF);
      });
      atomic_file(fs::path(at_out) / (split[i].source_id + ".log.txt"),
                  [&](const fs::path& tmp) { write_attack_log(results[i], tmp); });
      summary << split[i].source_id << ',' << (results[i].success ? 1 : 0) << ','
              << results[i].iterations_used << '\n';
      if (results[i].success) ++successes;
    }
    write_text_atomic(fs::path(at_out) / "summary.csv", summary.str());
    write_resolved_config(at, at_out);
    std::cout << successes << "/" << split.size() << " attacks succeeded; outputs in "
              << at_out << "\n";
  });

  // ---- evaluate ----
  auto* ev = app.add_subcommand("evaluate", "Score attacked meshes against a victim");
  std::string ev_data, ev_victim, ev_attacked, ev_out, ev_split = "test";
  int ev_walks = 8, ev_walk_length = 0;
  bool ev_heatmaps = true;
  ev->add_option("--data", ev_data, "Dataset directory")->required();
  ev->add_option("--victim", ev_victim, "Victim checkpoint")->required();
  ev->add_option("--attacked", ev_attacked,
                 "Attack output directory (omit to score the unmodified split)");
  ev->add_option("--out", ev_out, "Report output directory")->required();
  ev->add_option("--split", ev_split, "Split to evaluate")->capture_default_str();
  ev->add_option("--query-walks", ev_walks, "Walks averaged per query (walk victims)")
      ->capture_default_str();
  ev->add_option("--walk-length", ev_walk_length, "Query walk length (0: min(200, |V|))")
      ->capture_default_str();
  ev->add_flag("--heatmaps,!--no-heatmaps", ev_heatmaps, "Export displacement heat maps")
      ->capture_default_str();
  ev->callback([&] {
    const Dataset ds = load_dataset(ev_data);
    const auto split = pick_split(ds, ev_split);
    auto victim = load_victim(ev_victim, ds.class_names, ev_walks, ev_walk_length);
    AttackedSet set;
    if (ev_attacked.empty()) {
      set.originals = split;
      for (const LabeledMesh& lm : split) {
        AttackResult r;
        r.attacked_mesh = lm.mesh;
        set.results.push_back(std::move(r));
      }
    } else {
      set = load_attacked(split, ev_attacked);
    }
    const EvalReport report = evaluate_attack(*victim, set.originals, set.results);
    fs::create_directories(ev_out);
    write_text_atomic(fs::path(ev_out) / "report.txt", format_report(report));
    atomic_file(fs::path(ev_out) / "report.csv",
                [&](const fs::path& tmp) { save_report_csv(report, tmp); });
    if (ev_heatmaps && !ev_attacked.empty()) {
      const fs::path heat_dir = fs::path(ev_out) / "heatmaps";
      fs::create_directories(heat_dir);
      for (std::size_t i = 0; i < set.originals.size(); ++i) {
        const HeatMap heat = heatmap(set.originals[i].mesh, set.results[i].attacked_mesh);
        export_heatmap(set.results[i].attacked_mesh, heat,
                       heat_dir / (set.originals[i].source_id + ".ply"));
      }
    }
    write_resolved_config(ev, ev_out);
    std::cout << format_report(report);
  });

  // ---- gradcheck ----
  auto* gc = app.add_subcommand("gradcheck",
                                "Check analytic gradients against finite differences");
  int gc_trials = 20;
  double gc_tol = 1e-3;
  std::uint64_t gc_seed = 0;
  gc->add_option("--trials", gc_trials, "Random configurations to test")
      ->capture_default_str();
  gc->add_option("--tolerance", gc_tol, "Relative tolerance")->capture_default_str();
  gc->add_option("--seed", gc_seed, "Sweep seed")->capture_default_str();
  gc->callback([&] {
    Rng rng(split_seed(gc_seed, 424242));
    bool all_pass = true;
    for (int trial = 0; trial < gc_trials; ++trial) {
      NetSpec spec;
      spec.lift1 = 4 + static_cast<int>(rng.uniform_index(5));
      spec.hidden = 8 + static_cast<int>(rng.uniform_index(9));
      spec.rnn_layers = 1 + static_cast<int>(rng.uniform_index(2));
      spec.classes = 3;
      const int length = 1 + static_cast<int>(rng.uniform_index(6));
      const LossKind loss = rng.uniform_index(2) == 0 ? LossKind::KLD : LossKind::CrossEntropy;
      const ImitatorParams params = init_params(spec, rng.next_u64());
      Eigen::MatrixX3d coords(length, 3);
      for (int t = 0; t < length; ++t) {
        for (int k = 0; k < 3; ++k) coords(t, k) = rng.normal();
      }
      VectorXd ref;
      if (loss == LossKind::CrossEntropy) {
        ref = one_hot(static_cast<int>(rng.uniform_index(3)), 3);
      } else {
        ref = VectorXd(3);
        for (int i = 0; i < 3; ++i) ref[i] = rng.uniform() + 0.05;
        ref /= ref.sum();
      }
      const GradCheckReport report =
          grad_check(params, coords, loss, ref, gc_tol, rng.next_u64(), 200);
      std::printf("config %2d: L=%d hidden=%d layers=%d loss=%s checked=%d "
                  "max_abs=%.3e max_rel=%.3e %s\n",
                  trial, length, spec.hidden, spec.rnn_layers,
                  loss == LossKind::KLD ? "kld" : "ce", report.checked, report.max_abs_err,
                  report.max_rel_err, report.pass ? "ok" : "FAIL");
      if (!report.pass) all_pass = false;
    }
    std::cout << (all_pass ? "gradient check passed" : "gradient check FAILED") << "\n";
    if (!all_pass) throw NonConvergence("analytic gradients disagree with finite differences");
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
