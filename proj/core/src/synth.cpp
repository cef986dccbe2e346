#include "meshadv/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <tuple>

#include <nlohmann/json.hpp>

#include "meshadv/mesh_io.hpp"
#include "meshadv/rng.hpp"

namespace meshadv {

namespace {

constexpr double kPi = 3.14159265358979323846;

Mesh icosphere(int level) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  std::vector<Face> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (Vec3& v : verts) v.normalize();
  for (int it = 0; it < level; ++it) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto found = midpoint.find(key);
      if (found != midpoint.end()) return found->second;
      const int idx = static_cast<int>(verts.size());
      verts.push_back(((verts[a] + verts[b]) * 0.5).normalized());
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    next.reserve(faces.size() * 4);
    for (const Face& f : faces) {
      const int ab = mid(f[0], f[1]);
      const int bc = mid(f[1], f[2]);
      const int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  return make_mesh(std::move(verts), std::move(faces));
}

Mesh cube_grid(int n) {
  // lattice points on the surface of an n-cell cube grid, welded by key
  std::map<std::tuple<int, int, int>, int> index;
  std::vector<Vec3> verts;
  auto at = [&](int i, int j, int k) {
    auto found = index.find({i, j, k});
    if (found != index.end()) return found->second;
    const int idx = static_cast<int>(verts.size());
    verts.emplace_back(2.0 * i / n - 1.0, 2.0 * j / n - 1.0, 2.0 * k / n - 1.0);
    index.emplace(std::make_tuple(i, j, k), idx);
    return idx;
  };
  std::vector<Face> faces;
  // axis = fixed coordinate, side = 0 or n
  for (int axis = 0; axis < 3; ++axis) {
    for (int side : {0, n}) {
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          auto corner = [&](int da, int db) {
            const int u = a + da, v = b + db;
            switch (axis) {
              case 0: return at(side, u, v);
              case 1: return at(u, side, v);
              default: return at(u, v, side);
            }
          };
          const int p00 = corner(0, 0), p10 = corner(1, 0);
          const int p01 = corner(0, 1), p11 = corner(1, 1);
          faces.push_back({p00, p10, p11});
          faces.push_back({p00, p11, p01});
        }
      }
    }
  }
  return make_mesh(std::move(verts), std::move(faces));
}

Mesh cylinder(int around, int rings) {
  std::vector<Vec3> verts;
  // rings+1 circles of `around` vertices from z=-1 to z=1, plus two cap centers
  for (int r = 0; r <= rings; ++r) {
    const double z = -1.0 + 2.0 * r / rings;
    for (int i = 0; i < around; ++i) {
      const double t = 2.0 * kPi * i / around;
      verts.emplace_back(std::cos(t), std::sin(t), z);
    }
  }
  const int bottom_center = static_cast<int>(verts.size());
  verts.emplace_back(0, 0, -1);
  const int top_center = static_cast<int>(verts.size());
  verts.emplace_back(0, 0, 1);
  std::vector<Face> faces;
  auto ring_vert = [&](int r, int i) { return r * around + (i % around); };
  for (int r = 0; r < rings; ++r) {
    for (int i = 0; i < around; ++i) {
      const int a = ring_vert(r, i), b = ring_vert(r, i + 1);
      const int c = ring_vert(r + 1, i), d = ring_vert(r + 1, i + 1);
      faces.push_back({a, b, d});
      faces.push_back({a, d, c});
    }
  }
  for (int i = 0; i < around; ++i) {
    faces.push_back({bottom_center, ring_vert(0, i + 1), ring_vert(0, i)});
    faces.push_back({top_center, ring_vert(rings, i), ring_vert(rings, i + 1)});
  }
  return make_mesh(std::move(verts), std::move(faces));
}

Mesh torus(int major, int minor) {
  const double R = 1.0, r = 0.4;
  std::vector<Vec3> verts;
  verts.reserve(major * minor);
  for (int i = 0; i < major; ++i) {
    const double u = 2.0 * kPi * i / major;
    for (int j = 0; j < minor; ++j) {
      const double v = 2.0 * kPi * j / minor;
      verts.emplace_back((R + r * std::cos(v)) * std::cos(u),
                         (R + r * std::cos(v)) * std::sin(u), r * std::sin(v));
    }
  }
  std::vector<Face> faces;
  faces.reserve(2 * major * minor);
  auto at = [&](int i, int j) { return (i % major) * minor + (j % minor); };
  for (int i = 0; i < major; ++i) {
    for (int j = 0; j < minor; ++j) {
      const int a = at(i, j), b = at(i + 1, j), c = at(i, j + 1), d = at(i + 1, j + 1);
      faces.push_back({a, b, d});
      faces.push_back({a, d, c});
    }
  }
  return make_mesh(std::move(verts), std::move(faces));
}

Mesh cone(int around, int rings) {
  std::vector<Vec3> verts;
  const int apex = 0;
  verts.emplace_back(0, 0, 1);
  // rings of growing radius from just below the apex down to the base rim
  for (int t = 1; t <= rings; ++t) {
    const double frac = static_cast<double>(t) / rings;
    const double z = 1.0 - 2.0 * frac;
    for (int i = 0; i < around; ++i) {
      const double a = 2.0 * kPi * i / around;
      verts.emplace_back(frac * std::cos(a), frac * std::sin(a), z);
    }
  }
  const int base_center = static_cast<int>(verts.size());
  verts.emplace_back(0, 0, -1);
  std::vector<Face> faces;
  auto ring_vert = [&](int t, int i) { return 1 + (t - 1) * around + (i % around); };
  for (int i = 0; i < around; ++i) {
    faces.push_back({apex, ring_vert(1, i), ring_vert(1, i + 1)});
  }
  for (int t = 1; t < rings; ++t) {
    for (int i = 0; i < around; ++i) {
      const int a = ring_vert(t, i), b = ring_vert(t, i + 1);
      const int c = ring_vert(t + 1, i), d = ring_vert(t + 1, i + 1);
      faces.push_back({a, b, d});
      faces.push_back({a, d, c});
    }
  }
  for (int i = 0; i < around; ++i) {
    faces.push_back({base_center, ring_vert(rings, i + 1), ring_vert(rings, i)});
  }
  return make_mesh(std::move(verts), std::move(faces));
}

}  // namespace

const char* family_name(ShapeFamily family) {
  switch (family) {
    case ShapeFamily::Sphere: return "sphere";
    case ShapeFamily::Cube: return "cube";
    case ShapeFamily::Cylinder: return "cylinder";
    case ShapeFamily::Torus: return "torus";
    case ShapeFamily::Cone: return "cone";
  }
  return "unknown";
}

Mesh base_shape(ShapeFamily family, int resolution) {
  if (resolution < 1) throw InvalidSpec("resolution must be >= 1");
  switch (family) {
    case ShapeFamily::Sphere: return icosphere(resolution);
    case ShapeFamily::Cube: return cube_grid(2 * resolution + 1);
    case ShapeFamily::Cylinder: return cylinder(8 * resolution, 4 * resolution + 1);
    case ShapeFamily::Torus: return torus(8 * resolution, 6 * resolution);
    case ShapeFamily::Cone: return cone(8 * resolution, 5 * resolution);
  }
  throw InvalidSpec("unknown shape family");
}

Mesh generate_shape(const ShapeSpec& spec) {
  if (spec.jitter < 0) throw InvalidSpec("jitter must be >= 0");
  Mesh mesh = base_shape(spec.family, spec.resolution);
  Rng rng(spec.seed);
  for (Vec3& v : mesh.vertices) {
    v = v.cwiseProduct(spec.anisotropic_scale);
  }
  if (spec.jitter > 0) {
    for (Vec3& v : mesh.vertices) {
      v += spec.jitter * Vec3(rng.normal(), rng.normal(), rng.normal());
    }
  }
  return normalize_unit_sphere(mesh);
}

Dataset make_dataset(const DatasetConfig& config) {
  if (config.per_class < 2) throw InvalidSpec("per_class must be >= 2");
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) {
    throw InvalidSpec("train_fraction must be in (0, 1)");
  }
  if (config.families.empty()) throw InvalidSpec("at least one family required");
  Dataset ds;
  for (ShapeFamily f : config.families) ds.class_names.emplace_back(family_name(f));
  const int train_n =
      static_cast<int>(std::ceil(config.train_fraction * config.per_class));
  for (std::size_t c = 0; c < config.families.size(); ++c) {
    for (int i = 0; i < config.per_class; ++i) {
      const std::uint64_t mesh_seed =
          split_seed(config.seed, static_cast<std::uint64_t>(c) * 100003 + i);
      Rng scale_rng(split_seed(mesh_seed, 1));
      ShapeSpec spec;
      spec.class_id = static_cast<int>(c);
      spec.family = config.families[c];
      spec.resolution = config.resolution;
      spec.jitter = config.jitter;
      spec.anisotropic_scale = Vec3(scale_rng.uniform(0.6, 1.4),
                                    scale_rng.uniform(0.6, 1.4),
                                    scale_rng.uniform(0.6, 1.4));
      spec.seed = split_seed(mesh_seed, 2);
      char id[64];
      std::snprintf(id, sizeof(id), "%s_%03d", family_name(spec.family), i);
      LabeledMesh lm{generate_shape(spec), spec.class_id, id};
      if (i < train_n) {
        ds.train.push_back(std::move(lm));
      } else {
        ds.test.push_back(std::move(lm));
      }
    }
  }
  return ds;
}

namespace {

void save_split(const std::vector<LabeledMesh>& split, const char* split_name,
                const Dataset& ds, const std::filesystem::path& root,
                nlohmann::json& records) {
  for (const LabeledMesh& lm : split) {
    const auto dir = root / ds.class_names[lm.label] / split_name;
    std::filesystem::create_directories(dir);
    save_mesh(lm.mesh, dir / (lm.source_id + ".off"), MeshFormat::OFF);
    records.push_back({{"source_id", lm.source_id},
                       {"label", lm.label},
                       {"class", ds.class_names[lm.label]},
                       {"split", split_name}});
  }
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& root,
                  const DatasetConfig& config) {
  std::filesystem::create_directories(root);
  nlohmann::json manifest;
  manifest["class_names"] = dataset.class_names;
  manifest["per_class"] = config.per_class;
  manifest["train_fraction"] = config.train_fraction;
  manifest["resolution"] = config.resolution;
  manifest["jitter"] = config.jitter;
  manifest["seed"] = config.seed;
  nlohmann::json records = nlohmann::json::array();
  save_split(dataset.train, "train", dataset, root, records);
  save_split(dataset.test, "test", dataset, root, records);
  manifest["meshes"] = records;
  std::ofstream out(root / "manifest.json");
  if (!out) throw IoError("cannot write manifest.json under " + root.string());
  out << manifest.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& root) {
  std::ifstream in(root / "manifest.json");
  if (!in) throw IoError("cannot open manifest.json under " + root.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed manifest.json: ") + e.what());
  }
  Dataset ds;
  ds.class_names = manifest.at("class_names").get<std::vector<std::string>>();
  for (const auto& rec : manifest.at("meshes")) {
    LabeledMesh lm;
    lm.source_id = rec.at("source_id").get<std::string>();
    lm.label = rec.at("label").get<int>();
    const std::string split = rec.at("split").get<std::string>();
    const auto path = root / rec.at("class").get<std::string>() / split / (lm.source_id + ".off");
    lm.mesh = load_mesh(path, MeshFormat::OFF);
    (split == "train" ? ds.train : ds.test).push_back(std::move(lm));
  }
  return ds;
}

}  // namespace meshadv
