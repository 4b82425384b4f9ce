#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "isac/scenario.hpp"
#include "isac/types.hpp"

namespace isac {

/// Precoders and the sensing receive combiner. All vectors have length N.
/// u may be zero only before the first combiner update.
struct BeamformerSet {
  std::vector<VecC> v;  // communication precoders, one per UE
  VecC v0;              // sensing precoder
  VecC u;               // receive combiner

  static BeamformerSet zeros(int n, int k) {
    BeamformerSet b;
    b.v.assign(k, VecC::Zero(n));
    b.v0 = VecC::Zero(n);
    b.u = VecC::Zero(n);
    return b;
  }
};

/// Per-UE decoding coefficients, MSEs, and weights (w_k = 1/e_k).
struct WmmseState {
  std::vector<cplx> c;
  std::vector<double> e;
  std::vector<double> w;
};

struct CovarianceBundle {
  MatC R_x;  // total transmit covariance
  MatC R_c;  // communication-only covariance
  MatC R_0;  // sensing-only covariance
};

/// Two-way target response g0 * g0^T. The transpose (not the conjugate
/// transpose) is deliberate: the echo passes the same array twice, so the
/// steering phases add rather than cancel. A conjugate here is a common bug.
inline MatC target_response(const VecC& g0) { return g0 * g0.transpose(); }

inline CovarianceBundle covariances(const VecR& a_T, const BeamformerSet& beams) {
  const int n = static_cast<int>(a_T.size());
  MatC sum_comm = MatC::Zero(n, n);
  for (const VecC& vk : beams.v) {
    const VecC tv = scale_rows(a_T, vk);
    sum_comm.noalias() += tv * tv.adjoint();
  }
  const VecC tv0 = scale_rows(a_T, beams.v0);
  CovarianceBundle cov;
  cov.R_c = sum_comm;
  cov.R_0 = tv0 * tv0.adjoint();
  cov.R_x = sum_comm + cov.R_0;
  return cov;
}

inline double comm_sinr(int k, const Scenario& s, const VecR& a_T, const BeamformerSet& beams) {
  const VecC th = scale_rows(a_T, s.h[k]);  // th.dot(v) = h_k^H A_T v
  const cplx sig = th.dot(beams.v[k]);
  double interference = 0.0;
  for (int l = 0; l < static_cast<int>(beams.v.size()); ++l) {
    if (l == k) continue;
    interference += std::norm(th.dot(beams.v[l]));
  }
  interference += std::norm(th.dot(beams.v0));
  return std::norm(sig) / (interference + s.params.sigma_k2);
}

inline double sum_rate(const Scenario& s, const VecR& a_T, const BeamformerSet& beams) {
  double r = 0.0;
  for (int k = 0; k < static_cast<int>(beams.v.size()); ++k)
    r += std::log2(1.0 + comm_sinr(k, s, a_T, beams));
  return r;
}

/// Interference-plus-noise matrix of the echo:
/// sigma_0^2 G0 R_c G0^H + H_SI R_x H_SI^H + sigma_r^2 I.
inline MatC echo_interference_matrix(const Scenario& s, const VecR& a_T,
                                     const BeamformerSet& beams) {
  const CovarianceBundle cov = covariances(a_T, beams);
  const MatC g0m = target_response(s.g0);
  MatC m = s.params.sigma_02 * g0m * cov.R_c * g0m.adjoint();
  m.noalias() += s.H_SI * cov.R_x * s.H_SI.adjoint();
  m += s.params.sigma_r2 * MatC::Identity(s.geometry.N, s.geometry.N);
  return m;
}

inline double sensing_sinr(const Scenario& s, const VecR& a_T, const VecR& a_R,
                           const BeamformerSet& beams) {
  const VecC ru = scale_rows(a_R, beams.u);
  const MatC m = echo_interference_matrix(s, a_T, beams);
  const double denom = std::real(ru.dot(m * ru));  // dot() conjugates the left side
  if (denom <= 0.0) throw std::domain_error("combiner has no energy on the receive support");
  const VecC g0t = scale_rows(a_T, beams.v0);
  const cplx num = ru.dot(target_response(s.g0) * g0t);
  return s.params.B * s.params.sigma_02 * std::norm(num) / denom;
}

/// MVDR-style combiner: inverts the echo interference matrix restricted to
/// the receive support and applies it to A_R g0 (zero off the support).
/// The output is normalized to unit norm; the sensing SINR is invariant to
/// the combiner scale.
inline VecC optimal_combiner(const Scenario& s, const VecR& a_T, const VecR& a_R,
                             const BeamformerSet& beams, double support_tol = 1e-12) {
  std::vector<int> support;
  for (int n = 0; n < a_R.size(); ++n)
    if (a_R[n] > support_tol) support.push_back(n);
  if (support.empty()) throw std::domain_error("no receive antennas");

  const MatC m = echo_interference_matrix(s, a_T, beams);
  const int ns = static_cast<int>(support.size());
  MatC ms(ns, ns);
  VecC gs(ns);
  for (int i = 0; i < ns; ++i) {
    gs[i] = a_R[support[i]] * s.g0[support[i]];
    for (int j = 0; j < ns; ++j)
      ms(i, j) = a_R[support[i]] * m(support[i], support[j]) * a_R[support[j]];
  }
  const VecC us = ms.ldlt().solve(gs);
  VecC u = VecC::Zero(a_R.size());
  for (int i = 0; i < ns; ++i) u[support[i]] = us[i];
  const double nrm = u.norm();
  if (nrm > 0.0) u /= nrm;
  return u;
}

struct MseTriple {
  cplx c;
  double e;
  double w;
};

/// Optimal decoding coefficient, the MSE at that coefficient, and the
/// weight w = 1/e. Satisfies e_k = 1/(1 + SINR_k) exactly.
inline MseTriple mse_and_weight(int k, const Scenario& s, const VecR& a_T,
                                const BeamformerSet& beams) {
  const VecC th = scale_rows(a_T, s.h[k]);
  double denom = s.params.sigma_k2;
  for (const VecC& vl : beams.v) denom += std::norm(th.dot(vl));
  denom += std::norm(th.dot(beams.v0));
  const cplx sig = th.dot(beams.v[k]);  // h_k^H A_T v_k
  MseTriple t;
  t.c = sig / denom;
  t.e = std::norm(t.c) * denom - 2.0 * std::real(std::conj(t.c) * sig) + 1.0;
  t.w = 1.0 / t.e;
  return t;
}

/// MSE of UE k for a fixed decoding coefficient; used when assessing the
/// weighted surrogate with the coefficients held at their block values.
inline double mse_at(int k, const Scenario& s, const VecR& a_T, const BeamformerSet& beams,
                     cplx c) {
  const VecC th = scale_rows(a_T, s.h[k]);
  double denom = s.params.sigma_k2;
  for (const VecC& vl : beams.v) denom += std::norm(th.dot(vl));
  denom += std::norm(th.dot(beams.v0));
  const cplx sig = th.dot(beams.v[k]);
  return std::norm(c) * denom - 2.0 * std::real(std::conj(c) * sig) + 1.0;
}

}  // namespace isac
