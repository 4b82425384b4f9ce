#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "isac/types.hpp"

namespace isac {

/// Planar candidate antenna pool on the xy plane (z = 0). Antennas are
/// counted row by row from the bottom-left reference point, so antenna n
/// (1-based) sits at
///   [origin_x + mod(n-1, Nx) * dx,  bs_height + floor((n-1)/Nx) * dy,  0].
struct ArrayGeometry {
  int N = 0;
  int Nx = 0;
  int Ny = 0;
  double dx = 0.0;
  double dy = 0.0;
  double bs_height = 0.0;
  double origin_x = 0.0;
  std::vector<Vec3> positions;

  double aperture_width() const { return (Nx - 1) * dx; }
  double aperture_height() const { return (Ny - 1) * dy; }
  /// Bottom-left antenna position, used as the range reference point.
  const Vec3& reference_point() const { return positions.front(); }
};

/// Lattice pool with an explicit horizontal origin. Used by the baseline
/// array builders that re-center a smaller array inside the full aperture.
inline ArrayGeometry build_geometry_at(double origin_x, int nx, int ny, double dx, double dy,
                                       double bs_height) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("antenna counts must be >= 1");
  if (dx <= 0.0 || dy <= 0.0) throw std::invalid_argument("antenna spacings must be > 0");
  ArrayGeometry g;
  g.N = nx * ny;
  g.Nx = nx;
  g.Ny = ny;
  g.dx = dx;
  g.dy = dy;
  g.bs_height = bs_height;
  g.origin_x = origin_x;
  g.positions.reserve(g.N);
  for (int n = 0; n < g.N; ++n) {
    const int col = n % nx;
    const int row = n / nx;
    g.positions.emplace_back(origin_x + col * dx, bs_height + row * dy, 0.0);
  }
  return g;
}

inline ArrayGeometry build_geometry(int nx, int ny, double dx, double dy, double bs_height) {
  return build_geometry_at(0.0, nx, ny, dx, dy, bs_height);
}

/// Inverse of the lattice rule: recovers the 1-based antenna index from a
/// position. Throws if the position is not on the lattice.
inline int antenna_index_at(const ArrayGeometry& g, const Vec3& p, double tol = 1e-9) {
  const double fx = (p.x() - g.origin_x) / g.dx;
  const double fy = (p.y() - g.bs_height) / g.dy;
  const long col = std::lround(fx);
  const long row = std::lround(fy);
  if (col < 0 || col >= g.Nx || row < 0 || row >= g.Ny || std::abs(fx - col) > tol ||
      std::abs(fy - row) > tol || std::abs(p.z()) > tol)
    throw std::invalid_argument("position is not on the candidate lattice");
  return static_cast<int>(row * g.Nx + col) + 1;
}

}  // namespace isac
