#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "camoforge/common.hpp"
#include "camoforge/image.hpp"
#include "camoforge/mesh.hpp"
#include "camoforge/renderer.hpp"

namespace camoforge::testing {

// Central difference of f at x[i]; x is restored afterwards.
inline double central_difference(const std::function<double()>& f, double& x, double h) {
  const double saved = x;
  x = saved + h;
  const double up = f();
  x = saved - h;
  const double down = f();
  x = saved;
  return (up - down) / (2.0 * h);
}

inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline Image random_image(int h, int w, int c, Rng& rng, double lo = 0.0, double hi = 1.0) {
  Image img(h, w, c);
  for (double& v : img.data) v = rng.uniform(lo, hi);
  return img;
}

// Four triangles arranged as a square facing +z, centered on the origin.
inline Mesh quad_mesh() {
  std::vector<Vec3> v{{-0.5, -0.5, 0.0}, {0.5, -0.5, 0.0}, {0.5, 0.5, 0.0}, {-0.5, 0.5, 0.0},
                      {0.0, 0.0, 0.0}};
  std::vector<std::array<int, 3>> f{{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}};
  return Mesh(std::move(v), std::move(f));
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace camoforge::testing
