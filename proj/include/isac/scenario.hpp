#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "isac/geometry.hpp"
#include "isac/types.hpp"

namespace isac {

struct SystemParams {
  int K = 10;                      // number of UEs
  double P_max = 20.0;             // W
  double sigma_k2 = 1e-11;         // UE noise power, W (-80 dBm)
  double sigma_r2 = 1e-11;         // BS receiver noise power, W (-80 dBm)
  double sigma_02 = 1.0;           // RCS variance, m^2
  double alpha_SI = 1e-11;         // residual SI power gain (-110 dB)
  int B = 100;                     // sensing block length, channel uses
  double gamma_0 = db_to_linear(15.0);  // sensing SINR threshold, linear
  int N_act = 36;                  // max activated antennas
  double wavelength = wavelength_from_carrier(3e9);
  double ue_height = 1.5;          // m
  double target_height = 1.5;      // m
  double area_half_width = 100.0;  // m (square coverage area, half side)

  void validate(int n_candidates) const {
    if (K < 0) throw std::invalid_argument("K must be >= 0");
    if (P_max <= 0 || sigma_k2 <= 0 || sigma_r2 <= 0 || sigma_02 <= 0 || alpha_SI <= 0)
      throw std::invalid_argument("powers must be > 0");
    if (gamma_0 <= 0) throw std::invalid_argument("gamma_0 must be > 0");
    if (B < 1) throw std::invalid_argument("B must be >= 1");
    if (N_act < 1 || N_act > n_candidates)
      throw std::invalid_argument("N_act must be in [1, N]");
    if (wavelength <= 0) throw std::invalid_argument("wavelength must be > 0");
    if (area_half_width <= 0) throw std::invalid_argument("area_half_width must be > 0");
  }
};

/// One random drop: positions plus the synthesized channels, fully
/// determined by (seed, geometry, params).
struct Scenario {
  ArrayGeometry geometry;
  SystemParams params;
  std::vector<Vec3> ue_positions;
  Vec3 target_position = Vec3::Zero();
  std::vector<VecC> h;  // K communication channels, length N each
  VecC g0;              // sensing channel, length N
  MatC H_SI;            // residual self-interference, N x N
  std::uint64_t seed = 0;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Derives a sub-stream seed from a master seed and a path of indices.
/// The splitting rule is fixed so trials are reproducible independently of
/// execution order.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = master;
  for (std::uint64_t p : path) {
    std::uint64_t mix = s ^ (0xd1342543de82ef95ULL * (p + 1));
    s = detail::splitmix64(mix);
  }
  return s;
}

/// Deterministic uniform generator. Doubles are derived from raw mt19937_64
/// output, avoiding the implementation-defined std::uniform_real_distribution.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return (gen_() >> 11) * 0x1.0p-53; }  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 gen_;
};

/// Free-space communication channel: common gain sqrt(beta_k) with per-antenna
/// phase from the exact path-length difference to the reference point.
inline VecC comm_channel(const ArrayGeometry& g, const Vec3& ue_pos, double wavelength) {
  const double d_ref = (g.reference_point() - ue_pos).norm();
  if (d_ref <= 0.0) throw std::domain_error("UE coincides with the reference antenna");
  const double beta = std::pow(wavelength / (4.0 * std::numbers::pi * d_ref), 2);
  const double amp = std::sqrt(beta);
  VecC h(g.N);
  for (int n = 0; n < g.N; ++n) {
    const double d_n = (g.positions[n] - ue_pos).norm();
    if (d_n <= 0.0) throw std::domain_error("UE coincides with an antenna");
    const double phase = -2.0 * std::numbers::pi / wavelength * (d_n - d_ref);
    h[n] = amp * std::polar(1.0, phase);
  }
  return h;
}

/// Two-way sensing channel. The gain is beta_0 = sqrt(lambda^2/((4 pi)^3 d^4));
/// the square root applies to the whole expression.
inline VecC sensing_channel(const ArrayGeometry& g, const Vec3& target_pos, double wavelength) {
  const double d_ref = (g.reference_point() - target_pos).norm();
  if (d_ref <= 0.0) throw std::domain_error("target coincides with the reference antenna");
  const double beta =
      std::sqrt(wavelength * wavelength /
                (std::pow(4.0 * std::numbers::pi, 3) * std::pow(d_ref, 4)));
  const double amp = std::sqrt(beta);
  VecC g0(g.N);
  for (int n = 0; n < g.N; ++n) {
    const double d_n = (g.positions[n] - target_pos).norm();
    if (d_n <= 0.0) throw std::domain_error("target coincides with an antenna");
    const double phase = -2.0 * std::numbers::pi / wavelength * (d_n - d_ref);
    g0[n] = amp * std::polar(1.0, phase);
  }
  return g0;
}

/// Residual self-interference: constant magnitude sqrt(alpha_SI), i.i.d.
/// uniform phases.
inline MatC si_channel(SplitRng& rng, int n, double alpha_SI) {
  if (alpha_SI < 0.0) throw std::invalid_argument("alpha_SI must be >= 0");
  const double amp = std::sqrt(alpha_SI);
  MatC m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      m(i, j) = amp * std::polar(1.0, rng.uniform(0.0, 2.0 * std::numbers::pi));
  return m;
}

/// Samples one drop. UE and target x/z coordinates are uniform on the square
/// of side 2*area_half_width centered at the origin, with a 1 m horizontal
/// standoff from the BS to avoid near-singular path loss. Positions depend
/// only on the seed (not the geometry), so the same seed pairs the same drop
/// across different candidate pools.
inline Scenario sample_drop(std::uint64_t seed, const ArrayGeometry& geometry,
                            const SystemParams& params) {
  params.validate(geometry.N);
  constexpr double min_standoff = 1.0;

  Scenario s;
  s.geometry = geometry;
  s.params = params;
  s.seed = seed;

  SplitRng rng(derive_seed(seed, {0}));
  auto draw_xz = [&](double height) {
    const double hw = params.area_half_width;
    for (;;) {
      const double x = rng.uniform(-hw, hw);
      const double z = rng.uniform(-hw, hw);
      if (std::hypot(x, z) >= min_standoff) return Vec3(x, height, z);
    }
  };

  s.ue_positions.reserve(params.K);
  for (int k = 0; k < params.K; ++k) s.ue_positions.push_back(draw_xz(params.ue_height));
  s.target_position = draw_xz(params.target_height);

  s.h.reserve(params.K);
  for (int k = 0; k < params.K; ++k)
    s.h.push_back(comm_channel(geometry, s.ue_positions[k], params.wavelength));
  s.g0 = sensing_channel(geometry, s.target_position, params.wavelength);

  SplitRng si_rng(derive_seed(seed, {1}));
  s.H_SI = si_channel(si_rng, geometry.N, params.alpha_SI);
  return s;
}

}  // namespace isac
