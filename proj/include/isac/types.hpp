#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

namespace isac {

using cplx = std::complex<double>;
using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;
using VecR = Eigen::VectorXd;
using MatR = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;

constexpr double speed_of_light = 299792458.0;  // m/s

inline double wavelength_from_carrier(double f_c) { return speed_of_light / f_c; }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

/// Element-wise product diag(a) * v for a real mode vector a.
inline VecC scale_rows(const VecR& a, const VecC& v) {
  return a.cast<cplx>().cwiseProduct(v);
}

/// diag(a) * M * diag(a) without forming the diagonal matrices.
inline MatC sandwich_diag(const VecR& a, const MatC& m) {
  return a.cast<cplx>().asDiagonal() * m * a.cast<cplx>().asDiagonal();
}

}  // namespace isac
