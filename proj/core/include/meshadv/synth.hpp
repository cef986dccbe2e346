#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "meshadv/mesh.hpp"

namespace meshadv {

enum class ShapeFamily { Sphere, Cube, Cylinder, Torus, Cone };

const char* family_name(ShapeFamily family);

/// Recipe for one procedurally generated mesh.
struct ShapeSpec {
  int class_id = 0;
  ShapeFamily family = ShapeFamily::Sphere;
  int resolution = 2;            // subdivision level / grid density per family
  double jitter = 0.01;          // per-coordinate Gaussian noise, pre-normalization
  Vec3 anisotropic_scale{1, 1, 1};  // each factor in [0.6, 1.4]
  std::uint64_t seed = 0;
};

struct Dataset {
  std::vector<LabeledMesh> train;
  std::vector<LabeledMesh> test;
  std::vector<std::string> class_names;

  int num_classes() const { return static_cast<int>(class_names.size()); }
};

// Closed triangle mesh of the requested family: anisotropically scaled,
// jittered, then unit-sphere normalized. Deterministic for a fixed seed.
Mesh generate_shape(const ShapeSpec& spec);

// Base primitives at the requested resolution, unscaled and noise-free.
// Sphere resolution n is the icosphere subdivision level (10*4^n + 2 vertices);
// the grid-based families use resolution as their tessellation density.
Mesh base_shape(ShapeFamily family, int resolution);

struct DatasetConfig {
  std::vector<ShapeFamily> families{ShapeFamily::Sphere, ShapeFamily::Cube,
                                    ShapeFamily::Cylinder, ShapeFamily::Torus,
                                    ShapeFamily::Cone};
  int per_class = 40;
  double train_fraction = 0.8;
  int resolution = 2;        // per-family density is derived so |V| lands in [150, 400]
  double jitter = 0.01;
  std::uint64_t seed = 0;
};

Dataset make_dataset(const DatasetConfig& config);

// Directory layout: <root>/<class_name>/<split>/<source_id>.off + manifest.json
void save_dataset(const Dataset& dataset, const std::filesystem::path& root,
                  const DatasetConfig& config);
Dataset load_dataset(const std::filesystem::path& root);

}  // namespace meshadv
