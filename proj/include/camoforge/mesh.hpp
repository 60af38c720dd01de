#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace camoforge {

using Vec3 = std::array<double, 3>;

// Immutable triangle mesh. Faces hold 0-based vertex indices internally;
// the public face numbering used by masks and individuals is 1-based.
class Mesh {
 public:
  Mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& faces() const { return faces_; }
  int face_count() const { return static_cast<int>(faces_.size()); }

  Vec3 centroid() const { return centroid_; }
  // Largest vertex distance from the centroid.
  double bounding_radius() const { return radius_; }

  std::string to_obj() const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<std::array<int, 3>> faces_;
  Vec3 centroid_{};
  double radius_ = 0.0;
};

// OBJ subset: `v x y z` and `f i j k` (1-based; `i/t/n` forms are accepted
// and only the vertex index is kept). Comments and other records are ignored.
Mesh parse_obj(std::string_view text);
Mesh load_obj(const std::filesystem::path& path);

// 80-triangle blocky humanoid, 1.8 units tall, feet at y = 0.
Mesh make_boxperson();

// Splits every triangle into k*k triangles (k >= 1).
Mesh subdivide(const Mesh& mesh, int k);

// Resolves "builtin:boxperson", "builtin:boxperson@k" (subdivided) or a file path.
Mesh resolve_mesh(const std::string& spec);

}  // namespace camoforge
