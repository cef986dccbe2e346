#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "meshadv/mesh.hpp"

namespace meshadv {

enum class MeshFormat { OFF, OBJ, PLY };

// Infers the format from the file extension (.off/.obj/.ply, case-insensitive).
MeshFormat format_from_path(const std::filesystem::path& path);

/// Optional per-vertex attributes carried by ascii PLY files.
struct PlyAttributes {
  std::vector<double> quality;                    // "quality" float property
  std::vector<std::array<std::uint8_t, 3>> color; // red/green/blue uchar properties
};

Mesh load_mesh(const std::filesystem::path& path, MeshFormat format);
Mesh load_mesh(const std::filesystem::path& path);

// PLY load that also returns the optional per-vertex attributes, when present.
Mesh load_ply(const std::filesystem::path& path, PlyAttributes* attrs);

// Vertices are written with 17 significant digits so a save/load round trip
// reproduces double-precision coordinates bit-exactly.
void save_mesh(const Mesh& mesh, const std::filesystem::path& path, MeshFormat format);
void save_mesh(const Mesh& mesh, const std::filesystem::path& path);

void save_ply(const Mesh& mesh, const std::filesystem::path& path,
              const PlyAttributes* attrs = nullptr);

}  // namespace meshadv
