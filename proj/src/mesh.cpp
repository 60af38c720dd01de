#include "camoforge/mesh.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "camoforge/common.hpp"
#include "camoforge/io.hpp"

namespace camoforge {

Mesh::Mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  if (faces_.empty()) throw std::invalid_argument("mesh has no faces");
  const int nv = static_cast<int>(vertices_.size());
  for (const auto& f : faces_) {
    for (int idx : f) {
      if (idx < 0 || idx >= nv) throw std::invalid_argument("face references missing vertex");
    }
  }
  for (const auto& v : vertices_)
    for (int i = 0; i < 3; ++i) centroid_[i] += v[i];
  for (int i = 0; i < 3; ++i) centroid_[i] /= static_cast<double>(nv);
  for (const auto& v : vertices_) {
    const double dx = v[0] - centroid_[0], dy = v[1] - centroid_[1], dz = v[2] - centroid_[2];
    radius_ = std::max(radius_, std::sqrt(dx * dx + dy * dy + dz * dz));
  }
}

std::string Mesh::to_obj() const {
  std::string out;
  for (const auto& v : vertices_) {
    out += "v " + format_double(v[0], 9) + " " + format_double(v[1], 9) + " " +
           format_double(v[2], 9) + "\n";
  }
  for (const auto& f : faces_) {
    out += "f " + std::to_string(f[0] + 1) + " " + std::to_string(f[1] + 1) + " " +
           std::to_string(f[2] + 1) + "\n";
  }
  return out;
}

namespace {

[[noreturn]] void parse_error(int line, const std::string& what) {
  throw std::runtime_error("obj line " + std::to_string(line) + ": " + what);
}

int parse_index(const std::string& token, int line) {
  const std::string head = token.substr(0, token.find('/'));
  try {
    std::size_t used = 0;
    const int v = std::stoi(head, &used);
    if (used != head.size()) parse_error(line, "bad index '" + token + "'");
    return v;
  } catch (const std::logic_error&) {
    parse_error(line, "bad index '" + token + "'");
  }
}

}  // namespace

Mesh parse_obj(std::string_view text) {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<int> face_lines;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v{};
      if (!(ls >> v[0] >> v[1] >> v[2])) parse_error(lineno, "vertex needs 3 coordinates");
      vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) idx.push_back(parse_index(tok, lineno));
      if (idx.size() != 3) parse_error(lineno, "non-triangle face");
      std::array<int, 3> f{};
      for (int i = 0; i < 3; ++i) {
        // Negative indices are relative to the current vertex count.
        const int resolved = idx[i] < 0 ? static_cast<int>(vertices.size()) + idx[i] : idx[i] - 1;
        if (resolved < 0 || resolved >= static_cast<int>(vertices.size())) {
          parse_error(lineno, "vertex index out of range");
        }
        f[i] = resolved;
      }
      faces.push_back(f);
    }
  }
  if (faces.empty()) throw std::runtime_error("obj: no faces");
  return Mesh(std::move(vertices), std::move(faces));
}

Mesh load_obj(const std::filesystem::path& path) {
  return parse_obj(read_file(path));
}

namespace {

struct MeshBuilder {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;

  // Axis-aligned box; `caps` controls whether the -y / +y faces are emitted.
  void box(Vec3 lo, Vec3 hi, bool bottom = true, bool top = true) {
    const int base = static_cast<int>(vertices.size());
    for (int i = 0; i < 8; ++i) {
      vertices.push_back({(i & 1) ? hi[0] : lo[0], (i & 2) ? hi[1] : lo[1], (i & 4) ? hi[2] : lo[2]});
    }
    auto quad = [&](int a, int b, int c, int d) {
      faces.push_back({base + a, base + b, base + c});
      faces.push_back({base + a, base + c, base + d});
    };
    quad(0, 2, 3, 1);  // -z
    quad(4, 5, 7, 6);  // +z
    quad(0, 4, 6, 2);  // -x
    quad(1, 3, 7, 5);  // +x
    if (bottom) quad(0, 1, 5, 4);
    if (top) quad(2, 6, 7, 3);
  }
};

}  // namespace

Mesh make_boxperson() {
  MeshBuilder b;
  b.box({-0.20, 0.00, -0.10}, {-0.02, 0.85, 0.10});  // left leg
  b.box({0.02, 0.00, -0.10}, {0.20, 0.85, 0.10});    // right leg
  b.box({-0.25, 0.85, -0.13}, {0.25, 1.45, 0.13});   // torso
  b.box({-0.37, 0.80, -0.07}, {-0.26, 1.42, 0.07});  // left arm
  b.box({0.26, 0.80, -0.07}, {0.37, 1.42, 0.07});    // right arm
  b.box({-0.06, 1.45, -0.06}, {0.06, 1.52, 0.06}, false, false);  // neck
  b.box({-0.12, 1.52, -0.12}, {0.12, 1.80, 0.13});   // head
  return Mesh(std::move(b.vertices), std::move(b.faces));
}

Mesh subdivide(const Mesh& mesh, int k) {
  if (k < 1) throw std::invalid_argument("subdivide: k must be >= 1");
  if (k == 1) return mesh;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  for (const auto& f : mesh.faces()) {
    const Vec3& a = mesh.vertices()[f[0]];
    const Vec3& b = mesh.vertices()[f[1]];
    const Vec3& c = mesh.vertices()[f[2]];
    // Barycentric lattice (i, j) with i + j <= k; vertex = a + i/k (b-a) + j/k (c-a).
    const int base = static_cast<int>(vertices.size());
    std::map<std::pair<int, int>, int> id;
    for (int i = 0; i <= k; ++i) {
      for (int j = 0; i + j <= k; ++j) {
        Vec3 p{};
        for (int d = 0; d < 3; ++d) {
          p[d] = a[d] + (b[d] - a[d]) * i / k + (c[d] - a[d]) * j / k;
        }
        id[{i, j}] = base + static_cast<int>(id.size());
        vertices.push_back(p);
      }
    }
    for (int i = 0; i < k; ++i) {
      for (int j = 0; i + j < k; ++j) {
        faces.push_back({id[{i, j}], id[{i + 1, j}], id[{i, j + 1}]});
        if (i + j + 1 < k) faces.push_back({id[{i + 1, j}], id[{i + 1, j + 1}], id[{i, j + 1}]});
      }
    }
  }
  return Mesh(std::move(vertices), std::move(faces));
}

Mesh resolve_mesh(const std::string& spec) {
  const std::string prefix = "builtin:boxperson";
  if (spec.rfind(prefix, 0) == 0) {
    const std::string rest = spec.substr(prefix.size());
    if (rest.empty()) return make_boxperson();
    if (rest[0] == '@') {
      int k = 0;
      try {
        k = std::stoi(rest.substr(1));
      } catch (const std::logic_error&) {
        throw ConfigError("bad subdivision level in mesh spec: " + spec);
      }
      if (k < 1) throw ConfigError("bad subdivision level in mesh spec: " + spec);
      return subdivide(make_boxperson(), k);
    }
    throw ConfigError("unknown builtin mesh: " + spec);
  }
  if (spec.rfind("builtin:", 0) == 0) throw ConfigError("unknown builtin mesh: " + spec);
  if (!std::filesystem::exists(spec)) throw MissingPrerequisite("mesh file not found: " + spec);
  return load_obj(spec);
}

}  // namespace camoforge
