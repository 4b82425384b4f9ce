#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "isac/types.hpp"

namespace isac {

/// Quadratic constraint x'Px + 2q'x + r <= 0 with P symmetric PSD.
/// The same triple describes the objective (minimize x'Px + 2q'x + r).
struct QuadForm {
  MatR P;
  VecR q;
  double r = 0.0;

  double value(const VecR& x) const { return x.dot(P * x) + 2.0 * q.dot(x) + r; }
  VecR gradient(const VecR& x) const { return 2.0 * (P * x + q); }
};

struct LinCon {
  VecR a;
  double b = 0.0;  // a'x <= b
};

struct Box {
  VecR lo;
  VecR hi;
};

struct QcqpProblem {
  int n = 0;
  QuadForm objective;
  std::vector<QuadForm> ineqs;
  std::vector<LinCon> linear_ineqs;
  std::optional<Box> box;
};

enum class QcqpStatus { Optimal, Infeasible, MaxIter };

struct QcqpTolerances {
  double kkt_tol = 1e-8;   // duality gap / dual residual, scaled by 1 + |f0 at start|
  double feas_tol = 1e-9;  // constraint violation, same scaling
  int max_barrier_stages = 64;
  int max_newton_per_stage = 64;
  double mu = 20.0;  // barrier parameter growth
};

struct QcqpSolution {
  VecR x;
  QcqpStatus status = QcqpStatus::MaxIter;
  double objective_value = 0.0;
  double max_violation = 0.0;
  double kkt_residual = 0.0;
  int newton_iters = 0;
  // Centering merit t*f0 + phi per Newton step; stage_starts marks where each
  // barrier stage begins. The merit is non-increasing within a stage.
  std::vector<double> merit_trace;
  std::vector<int> stage_starts;
};

inline const char* to_string(QcqpStatus s) {
  switch (s) {
    case QcqpStatus::Optimal: return "optimal";
    case QcqpStatus::Infeasible: return "infeasible";
    default: return "max_iter";
  }
}

// ---------------------------------------------------------------------------
// Complex-to-real embedding. A complex vector v maps to x = [Re v; Im v].

/// Real embedding of a Hermitian matrix: [[Re Q, -Im Q], [Im Q, Re Q]].
/// Satisfies x' Qe x = v^H Q v exactly under the stacking above.
inline MatR embed_hermitian(const MatC& q, double herm_tol = 1e-9) {
  if (q.rows() != q.cols()) throw std::invalid_argument("matrix must be square");
  const double dev = (q - q.adjoint()).cwiseAbs().maxCoeff();
  if (dev > herm_tol * (1.0 + q.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("matrix is not Hermitian");
  const MatC h = 0.5 * (q + q.adjoint());
  const int n = static_cast<int>(h.rows());
  MatR out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = h.real();
  out.topRightCorner(n, n) = -h.imag();
  out.bottomLeftCorner(n, n) = h.imag();
  out.bottomRightCorner(n, n) = h.real();
  return out;
}

/// Real embedding of the linear form Re{b^H v} = be' x.
inline VecR embed_linear(const VecC& b) {
  VecR out(2 * b.size());
  out.head(b.size()) = b.real();
  out.tail(b.size()) = b.imag();
  return out;
}

inline VecR stack_complex(const VecC& v) {
  VecR out(2 * v.size());
  out.head(v.size()) = v.real();
  out.tail(v.size()) = v.imag();
  return out;
}

inline VecC lift_complex(const VecR& x) {
  const int n = static_cast<int>(x.size()) / 2;
  VecC v(n);
  v.real() = x.head(n);
  v.imag() = x.tail(n);
  return v;
}

// ---------------------------------------------------------------------------

namespace qcqp_detail {

/// Symmetrizes and validates a PSD matrix. Eigenvalues slightly below zero
/// (beyond -1e-10 * trace) are clipped; anything worse is rejected.
inline MatR repair_psd(const MatR& p) {
  if (p.size() == 0) return p;
  MatR s = 0.5 * (p + p.transpose());
  // Cheap certificate first: LLT of s + delta*I succeeding bounds the
  // spectrum from below without a full eigensolve.
  const double tr = s.trace();
  const double delta = 1e-10 * std::max(tr, 0.0) + 1e-300;
  Eigen::LLT<MatR> llt(s + delta * MatR::Identity(s.rows(), s.cols()));
  if (llt.info() == Eigen::Success) return s;

  Eigen::SelfAdjointEigenSolver<MatR> es(s);
  const VecR evals = es.eigenvalues();
  const double lmax = std::max(evals.maxCoeff(), 0.0);
  const double floor = -(1e-10 * std::max(tr, 0.0) + 1e-12 * lmax + 1e-300);
  if (evals.minCoeff() < floor)
    throw std::invalid_argument("quadratic form matrix is not positive semidefinite");
  VecR clipped = evals.cwiseMax(0.0);
  return es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
}

/// Problem reduced to free variables: coordinates pinned by a degenerate box
/// interval (lo == hi) and coordinates that appear nowhere are substituted out.
struct Reduced {
  int n_full = 0;
  std::vector<int> free_idx;          // position in full x per reduced coord
  VecR x_fixed;                       // full-length; fixed coords filled in
  QuadForm objective;
  std::vector<QuadForm> quads;
  std::vector<LinCon> lins;
  bool has_box = false;
  VecR lo, hi;                        // reduced box (only if has_box)
  bool trivially_infeasible = false;

  VecR expand(const VecR& y) const {
    VecR x = x_fixed;
    for (size_t i = 0; i < free_idx.size(); ++i) x[free_idx[i]] = y[static_cast<int>(i)];
    return x;
  }
};

inline QuadForm restrict_quad(const QuadForm& f, const std::vector<int>& free_idx,
                              const VecR& x_fixed, const std::vector<bool>& is_free) {
  const int nf = static_cast<int>(free_idx.size());
  QuadForm out;
  out.P.resize(nf, nf);
  out.q.resize(nf);
  VecR xc = x_fixed;
  for (int i : free_idx) xc[i] = 0.0;
  const VecR px = f.P * xc;
  out.r = f.r + xc.dot(px) + 2.0 * f.q.dot(xc);
  for (int i = 0; i < nf; ++i) {
    out.q[i] = f.q[free_idx[i]] + px[free_idx[i]];
    for (int j = 0; j < nf; ++j) out.P(i, j) = f.P(free_idx[i], free_idx[j]);
  }
  (void)is_free;
  return out;
}

inline Reduced presolve(const QcqpProblem& prob, double feas_tol) {
  Reduced red;
  red.n_full = prob.n;
  red.x_fixed = VecR::Zero(prob.n);
  std::vector<bool> is_free(prob.n, true);

  if (prob.box) {
    for (int i = 0; i < prob.n; ++i) {
      if (prob.box->hi[i] < prob.box->lo[i] - 1e-12) {
        red.trivially_infeasible = true;
        return red;
      }
      if (prob.box->hi[i] - prob.box->lo[i] <= 1e-12) {
        is_free[i] = false;
        red.x_fixed[i] = 0.5 * (prob.box->lo[i] + prob.box->hi[i]);
      }
    }
  } else {
    // Without a box, coordinates touched by no quadratic or linear term are
    // unconstrained and irrelevant; pin them to zero so the Newton system
    // stays nonsingular.
    for (int i = 0; i < prob.n; ++i) {
      bool touched = prob.objective.q[i] != 0.0 || prob.objective.P.col(i).cwiseAbs().sum() != 0.0;
      for (const auto& f : prob.ineqs)
        touched = touched || f.q[i] != 0.0 || f.P.col(i).cwiseAbs().sum() != 0.0;
      for (const auto& l : prob.linear_ineqs) touched = touched || l.a[i] != 0.0;
      if (!touched) is_free[i] = false;
    }
  }

  for (int i = 0; i < prob.n; ++i)
    if (is_free[i]) red.free_idx.push_back(i);

  red.objective = restrict_quad(prob.objective, red.free_idx, red.x_fixed, is_free);
  red.objective.P = repair_psd(red.objective.P);

  for (const auto& f : prob.ineqs) {
    QuadForm g = restrict_quad(f, red.free_idx, red.x_fixed, is_free);
    const double pmax = g.P.size() ? g.P.cwiseAbs().maxCoeff() : 0.0;
    const double qmax = g.q.size() ? g.q.cwiseAbs().maxCoeff() : 0.0;
    if (pmax == 0.0 && qmax == 0.0) {
      if (g.r > feas_tol) red.trivially_infeasible = true;
      continue;
    }
    if (pmax == 0.0) {
      red.lins.push_back({2.0 * g.q, -g.r});
      continue;
    }
    g.P = repair_psd(g.P);
    red.quads.push_back(std::move(g));
  }

  for (const auto& l : prob.linear_ineqs) {
    const int nf = static_cast<int>(red.free_idx.size());
    VecR a(nf);
    double shift = 0.0;
    for (int i = 0; i < prob.n; ++i)
      if (!is_free[i]) shift += l.a[i] * red.x_fixed[i];
    for (int i = 0; i < nf; ++i) a[i] = l.a[red.free_idx[i]];
    const double b = l.b - shift;
    if (a.size() == 0 || a.cwiseAbs().maxCoeff() == 0.0) {
      if (b < -feas_tol) red.trivially_infeasible = true;
      continue;
    }
    red.lins.push_back({std::move(a), b});
  }

  if (prob.box) {
    red.has_box = true;
    const int nf = static_cast<int>(red.free_idx.size());
    red.lo.resize(nf);
    red.hi.resize(nf);
    for (int i = 0; i < nf; ++i) {
      red.lo[i] = prob.box->lo[red.free_idx[i]];
      red.hi[i] = prob.box->hi[red.free_idx[i]];
    }
  }
  return red;
}

struct BarrierEval {
  double phi = 0.0;
  bool interior = false;
};

class BarrierMachine {
 public:
  explicit BarrierMachine(const Reduced& red) : r_(red), nf_(static_cast<int>(red.free_idx.size())) {
    m_ = static_cast<int>(r_.quads.size() + r_.lins.size());
    if (r_.has_box) m_ += 2 * nf_;
  }

  int constraint_count() const { return m_; }

  bool strictly_interior(const VecR& y, double margin) const {
    for (const auto& f : r_.quads)
      if (f.value(y) > -margin) return false;
    for (const auto& l : r_.lins)
      if (l.a.dot(y) - l.b > -margin) return false;
    if (r_.has_box)
      for (int i = 0; i < nf_; ++i)
        if (y[i] - r_.hi[i] > -margin || r_.lo[i] - y[i] > -margin) return false;
    return true;
  }

  // phi = -sum log(-f_i); +inf (interior=false) outside the domain.
  BarrierEval barrier(const VecR& y) const {
    BarrierEval ev;
    double phi = 0.0;
    for (const auto& f : r_.quads) {
      const double v = f.value(y);
      if (v >= 0.0) return ev;
      phi -= std::log(-v);
    }
    for (const auto& l : r_.lins) {
      const double v = l.a.dot(y) - l.b;
      if (v >= 0.0) return ev;
      phi -= std::log(-v);
    }
    if (r_.has_box) {
      for (int i = 0; i < nf_; ++i) {
        const double vu = y[i] - r_.hi[i];
        const double vl = r_.lo[i] - y[i];
        if (vu >= 0.0 || vl >= 0.0) return ev;
        phi -= std::log(-vu) + std::log(-vl);
      }
    }
    ev.phi = phi;
    ev.interior = true;
    return ev;
  }

  // Gradient and Hessian of t*f0 + phi at an interior point.
  void newton_terms(const VecR& y, double t, VecR& grad, MatR& hess) const {
    grad = t * r_.objective.gradient(y);
    hess = (2.0 * t) * r_.objective.P;
    for (const auto& f : r_.quads) {
      const double v = f.value(y);
      const VecR g = f.gradient(y);
      grad.noalias() += g / (-v);
      hess.noalias() += (2.0 / (-v)) * f.P;
      hess.noalias() += (1.0 / (v * v)) * (g * g.transpose());
    }
    for (const auto& l : r_.lins) {
      const double v = l.a.dot(y) - l.b;
      grad.noalias() += l.a / (-v);
      hess.noalias() += (1.0 / (v * v)) * (l.a * l.a.transpose());
    }
    if (r_.has_box) {
      for (int i = 0; i < nf_; ++i) {
        const double du = r_.hi[i] - y[i];
        const double dl = y[i] - r_.lo[i];
        grad[i] += 1.0 / du - 1.0 / dl;
        hess(i, i) += 1.0 / (du * du) + 1.0 / (dl * dl);
      }
    }
  }

 private:
  const Reduced& r_;
  int nf_;
  int m_ = 0;
};

struct CenterResult {
  bool converged = false;
  double grad_norm = 0.0;
};

/// Newton centering of t*f0 + phi with backtracking line search.
inline CenterResult center(const BarrierMachine& bm, const Reduced& red, VecR& y, double t,
                           int max_newton, QcqpSolution* diag) {
  CenterResult res;
  VecR grad;
  MatR hess;
  for (int it = 0; it < max_newton; ++it) {
    bm.newton_terms(y, t, grad, hess);
    res.grad_norm = grad.norm();

    VecR step;
    double decrement = -1.0;
    double ridge = 0.0;
    for (int attempt = 0; attempt < 4; ++attempt) {
      MatR h = hess;
      if (ridge > 0.0) h.diagonal().array() += ridge;
      Eigen::LDLT<MatR> ldlt(h);
      step = ldlt.solve(-grad);
      decrement = -grad.dot(step);
      if (step.allFinite() && decrement >= 0.0) break;
      ridge = (ridge == 0.0) ? 1e-10 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff())
                             : ridge * 100.0;
    }
    if (!step.allFinite() || decrement < 0.0) return res;

    const double f0 = t * red.objective.value(y) + bm.barrier(y).phi;
    if (diag) diag->merit_trace.push_back(f0);
    if (diag) ++diag->newton_iters;
    if (0.5 * decrement <= 1e-11 * (1.0 + std::abs(f0))) {
      res.converged = true;
      return res;
    }

    double alpha = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const VecR cand = y + alpha * step;
      const BarrierEval ev = bm.barrier(cand);
      if (ev.interior) {
        const double fc = t * red.objective.value(cand) + ev.phi;
        if (fc <= f0 - 0.01 * alpha * decrement) {
          y = cand;
          moved = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!moved) {
      res.converged = true;  // line search exhausted; treat as centered
      return res;
    }
  }
  return res;
}

}  // namespace qcqp_detail

// ---------------------------------------------------------------------------

/// Writes the problem in a plain-text form suitable for checking against any
/// external convex solver.
inline void dump_problem(const QcqpProblem& prob, std::ostream& os) {
  Eigen::IOFormat fmt(Eigen::FullPrecision, Eigen::DontAlignCols, " ", "\n", "", "", "", "");
  os << "n " << prob.n << "\n";
  os << "objective P\n" << prob.objective.P.format(fmt) << "\n";
  os << "objective q\n" << prob.objective.q.transpose().format(fmt) << "\n";
  os << "objective r " << prob.objective.r << "\n";
  os << "quadratic_constraints " << prob.ineqs.size() << "\n";
  for (const auto& f : prob.ineqs) {
    os << "P\n" << f.P.format(fmt) << "\n";
    os << "q\n" << f.q.transpose().format(fmt) << "\n";
    os << "r " << f.r << "\n";
  }
  os << "linear_constraints " << prob.linear_ineqs.size() << "\n";
  for (const auto& l : prob.linear_ineqs)
    os << "a " << l.a.transpose().format(fmt) << " b " << l.b << "\n";
  if (prob.box) {
    os << "box_lo " << prob.box->lo.transpose().format(fmt) << "\n";
    os << "box_hi " << prob.box->hi.transpose().format(fmt) << "\n";
  }
}

inline double max_constraint_violation(const QcqpProblem& prob, const VecR& x) {
  double v = 0.0;
  for (const auto& f : prob.ineqs) v = std::max(v, f.value(x));
  for (const auto& l : prob.linear_ineqs) v = std::max(v, l.a.dot(x) - l.b);
  if (prob.box)
    for (int i = 0; i < prob.n; ++i) {
      v = std::max(v, prob.box->lo[i] - x[i]);
      v = std::max(v, x[i] - prob.box->hi[i]);
    }
  return v;
}

/// Solves a convex QCQP by a log-barrier interior-point method. A phase-I
/// slack-minimization pass finds a strictly feasible start (or certifies
/// infeasibility); phase II follows the central path with Newton centering.
inline QcqpSolution solve(const QcqpProblem& prob, const QcqpTolerances& tol = {},
                          const VecR* x0_hint = nullptr) {
  using namespace qcqp_detail;
  if (prob.n <= 0) throw std::invalid_argument("problem dimension must be positive");
  if (prob.objective.P.rows() != prob.n || prob.objective.q.size() != prob.n)
    throw std::invalid_argument("objective dimensions do not match n");
  for (const auto& f : prob.ineqs)
    if (f.P.rows() != prob.n || f.q.size() != prob.n)
      throw std::invalid_argument("constraint dimensions do not match n");
  for (const auto& l : prob.linear_ineqs)
    if (l.a.size() != prob.n) throw std::invalid_argument("linear constraint dimension mismatch");
  if (prob.box && (prob.box->lo.size() != prob.n || prob.box->hi.size() != prob.n))
    throw std::invalid_argument("box dimension mismatch");

  QcqpSolution sol;
  Reduced red = presolve(prob, tol.feas_tol);
  if (red.trivially_infeasible) {
    sol.status = QcqpStatus::Infeasible;
    sol.x = red.x_fixed;
    sol.objective_value = prob.objective.value(sol.x);
    sol.max_violation = max_constraint_violation(prob, sol.x);
    return sol;
  }

  const int nf = static_cast<int>(red.free_idx.size());
  if (nf == 0) {
    sol.x = red.x_fixed;
    sol.objective_value = prob.objective.value(sol.x);
    sol.max_violation = max_constraint_violation(prob, sol.x);
    sol.status = sol.max_violation <= tol.feas_tol * (1.0 + std::abs(sol.objective_value))
                     ? QcqpStatus::Optimal
                     : QcqpStatus::Infeasible;
    return sol;
  }

  BarrierMachine bm(red);
  const int m = bm.constraint_count();

  // Starting guess for phase I / interior check.
  VecR y0 = VecR::Zero(nf);
  if (red.has_box)
    for (int i = 0; i < nf; ++i) {
      if (std::isfinite(red.lo[i]) && std::isfinite(red.hi[i]))
        y0[i] = 0.5 * (red.lo[i] + red.hi[i]);
      else if (std::isfinite(red.lo[i]))
        y0[i] = red.lo[i] + 1.0;
      else if (std::isfinite(red.hi[i]))
        y0[i] = red.hi[i] - 1.0;
    }
  if (x0_hint && x0_hint->size() == prob.n) {
    VecR yh(nf);
    for (int i = 0; i < nf; ++i) yh[i] = (*x0_hint)[red.free_idx[i]];
    double margin = 1e-10;
    if (bm.strictly_interior(yh, margin)) y0 = yh;
  }

  const double scale = 1.0 + std::abs(prob.objective.value(red.expand(y0)));
  const double gap_target = tol.kkt_tol * scale;
  const double feas_target = tol.feas_tol * scale;

  if (m == 0) {
    // Unconstrained quadratic: minimum-norm stationary point.
    Eigen::CompleteOrthogonalDecomposition<MatR> cod(red.objective.P);
    VecR y = cod.solve(-red.objective.q);
    const double resid = (red.objective.P * y + red.objective.q).norm();
    sol.x = red.expand(y);
    sol.objective_value = prob.objective.value(sol.x);
    sol.max_violation = 0.0;
    sol.kkt_residual = resid / scale;
    sol.status = (resid <= std::sqrt(tol.kkt_tol) * scale && y.allFinite())
                     ? QcqpStatus::Optimal
                     : QcqpStatus::MaxIter;
    return sol;
  }

  // Phase I: minimize the common slack s with f_i(y) <= s.
  VecR y = y0;
  if (!bm.strictly_interior(y, 1e-12)) {
    double s0 = -std::numeric_limits<double>::infinity();
    for (const auto& f : red.quads) s0 = std::max(s0, f.value(y0));
    for (const auto& l : red.lins) s0 = std::max(s0, l.a.dot(y0) - l.b);
    if (red.has_box)
      for (int i = 0; i < nf; ++i)
        s0 = std::max({s0, red.lo[i] - y0[i], y0[i] - red.hi[i]});
    const double s_scale = 1.0 + std::abs(s0);

    Reduced p1;
    p1.n_full = nf + 1;
    for (int i = 0; i <= nf; ++i) p1.free_idx.push_back(i);
    p1.x_fixed = VecR::Zero(nf + 1);
    p1.objective.P = MatR::Zero(nf + 1, nf + 1);
    p1.objective.q = VecR::Zero(nf + 1);
    p1.objective.q[nf] = 0.5;  // minimize s
    auto extend_quad = [&](const QuadForm& f) {
      QuadForm g;
      g.P = MatR::Zero(nf + 1, nf + 1);
      g.P.topLeftCorner(nf, nf) = f.P;
      g.q = VecR::Zero(nf + 1);
      g.q.head(nf) = f.q;
      g.q[nf] = -0.5;
      g.r = f.r;
      return g;
    };
    for (const auto& f : red.quads) p1.quads.push_back(extend_quad(f));
    for (const auto& l : red.lins) {
      VecR a = VecR::Zero(nf + 1);
      a.head(nf) = l.a;
      a[nf] = -1.0;
      p1.lins.push_back({std::move(a), l.b});
    }
    if (red.has_box) {
      for (int i = 0; i < nf; ++i) {
        VecR au = VecR::Zero(nf + 1);
        au[i] = 1.0;
        au[nf] = -1.0;
        p1.lins.push_back({std::move(au), red.hi[i]});
        VecR al = VecR::Zero(nf + 1);
        al[i] = -1.0;
        al[nf] = -1.0;
        p1.lins.push_back({std::move(al), -red.lo[i]});
      }
    }
    {  // keep the slack bounded below so phase I cannot diverge
      VecR a = VecR::Zero(nf + 1);
      a[nf] = -1.0;
      p1.lins.push_back({std::move(a), 2.0 * s_scale});
    }

    BarrierMachine bm1(p1);
    VecR z(nf + 1);
    z.head(nf) = y0;
    z[nf] = s0 + s_scale;

    double t1 = 1.0;
    bool strictly_feasible = false;
    for (int stage = 0; stage < tol.max_barrier_stages; ++stage) {
      center(bm1, p1, z, t1, tol.max_newton_per_stage, nullptr);
      if (z[nf] < -1e-10 * s_scale) {
        strictly_feasible = true;
        break;
      }
      if (bm1.constraint_count() / t1 < 0.5 * tol.feas_tol * s_scale) break;
      t1 *= tol.mu;
    }
    y = z.head(nf);
    if (!strictly_feasible) {
      if (z[nf] > tol.feas_tol * s_scale || !bm.strictly_interior(y, 0.0)) {
        sol.status = QcqpStatus::Infeasible;
        sol.x = red.expand(y);
        sol.objective_value = prob.objective.value(sol.x);
        sol.max_violation = max_constraint_violation(prob, sol.x);
        return sol;
      }
    }
  }

  // Phase II: follow the central path.
  double t = std::max(1.0, static_cast<double>(m) / scale);
  bool centered = false;
  for (int stage = 0; stage < tol.max_barrier_stages; ++stage) {
    sol.stage_starts.push_back(static_cast<int>(sol.merit_trace.size()));
    const CenterResult cr = center(bm, red, y, t, tol.max_newton_per_stage, &sol);
    centered = cr.converged;
    if (static_cast<double>(m) / t <= gap_target) break;
    t *= tol.mu;
  }

  sol.x = red.expand(y);
  sol.objective_value = prob.objective.value(sol.x);
  sol.max_violation = max_constraint_violation(prob, sol.x);

  VecR grad;
  MatR hess;
  bm.newton_terms(y, t, grad, hess);
  const double dual_resid = grad.norm() / t;
  const double gap = static_cast<double>(m) / t;
  sol.kkt_residual = std::max(gap, dual_resid) / scale;
  const bool feas_ok = sol.max_violation <= feas_target;
  sol.status = (centered && gap <= gap_target && feas_ok) ? QcqpStatus::Optimal
                                                          : QcqpStatus::MaxIter;
  return sol;
}

}  // namespace isac
