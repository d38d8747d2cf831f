// linalg.hpp — Hermitian eigensolvers and matrix-free helpers.
//
// Dense Hermitian diagonalization goes through LAPACK's zheevd when the
// build found LAPACKE (BLOCHLAB_HAVE_LAPACKE), with an Eigen
// SelfAdjointEigenSolver fallback that is also exposed directly so the two
// routes can be cross-checked.  On top of that: exp(iH) for Hermitian H via
// the spectral decomposition (unitary by construction), a Taylor
// scaling-and-repeat applier exp(±iA)v for matrix-free operators, and a
// Lanczos estimator for the spectral norm of a Hermitian operator given only
// its action.

#pragma once

#include "blochlab/common.hpp"

#include <Eigen/Dense>

#if defined(BLOCHLAB_HAVE_LAPACKE)
#include <lapacke.h>
#endif

namespace blochlab {

struct EigResult {
  Eigen::VectorXd values;    // ascending
  Eigen::MatrixXcd vectors;  // columns; empty when not requested
};

// Eigen route (always available).
inline EigResult hermitian_eigs_eigen(const Eigen::MatrixXcd& A, bool want_vectors = true) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
  es.compute(A, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw numerical_error("Hermitian eigensolver failed to converge");
  EigResult r;
  r.values = es.eigenvalues();
  if (want_vectors) r.vectors = es.eigenvectors();
  return r;
}

// Preferred route: LAPACK zheevd when present, else the Eigen route.
inline EigResult hermitian_eigs(const Eigen::MatrixXcd& A, bool want_vectors = true) {
#if defined(BLOCHLAB_HAVE_LAPACKE)
  auto n = static_cast<lapack_int>(A.rows());
  if (n == 0) return {};
  Eigen::MatrixXcd work = A;  // column-major, overwritten with eigenvectors
  Eigen::VectorXd w(n);
  // std::complex<double> and the header's complex type are layout-compatible.
  lapack_int info =
      LAPACKE_zheevd(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'L', n,
                     reinterpret_cast<lapack_complex_double*>(work.data()), n, w.data());
  if (info != 0) throw numerical_error("zheevd failed with info != 0");
  EigResult r;
  r.values = std::move(w);
  if (want_vectors) r.vectors = std::move(work);
  return r;
#else
  return hermitian_eigs_eigen(A, want_vectors);
#endif
}

inline Eigen::VectorXd hermitian_eigenvalues(const Eigen::MatrixXcd& A) {
  return hermitian_eigs(A, false).values;
}

// exp(i s H) for Hermitian H via spectral decomposition; s real.
inline Eigen::MatrixXcd matrix_exp_i_hermitian(const Eigen::MatrixXcd& H, double s = 1.0) {
  EigResult e = hermitian_eigs(H, true);
  Eigen::VectorXcd phase(e.values.size());
  for (Eigen::Index j = 0; j < e.values.size(); ++j)
    phase[j] = std::exp(cplx(0.0, s * e.values[j]));
  return e.vectors * phase.asDiagonal() * e.vectors.adjoint();
}

// Largest singular value of a dense matrix (not necessarily Hermitian).
inline double spectral_norm_dense(const Eigen::MatrixXcd& A) {
  if (A.rows() == 0 || A.cols() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(A);
  return svd.singularValues()[0];
}

// w = exp(i·sign·A) v for a Hermitian operator given by its action
// av(in, out).  norm_bound must dominate the spectral norm of A; the
// exponential is split into 2^s factors with ‖A‖/2^s ≤ 1/2 and each factor
// is summed as a Taylor series (the series in the scaled operator converges
// to rounding in ≲ 20 terms).
template <class MatVec>
inline void expi_apply_inplace(const MatVec& av, double norm_bound, double sign,
                               Eigen::VectorXcd& v) {
  int s = 0;
  double half = std::max(norm_bound, 0.0);
  while (half > 0.5 && s < 60) {
    half *= 0.5;
    ++s;
  }
  double scale = std::ldexp(1.0, -s);
  cplx unit = cplx(0.0, sign * scale);
  long reps = 1L << s;
  Eigen::VectorXcd term(v.size()), tmp(v.size());
  for (long rep = 0; rep < reps; ++rep) {
    term = v;
    Eigen::VectorXcd acc = v;
    for (int k = 1; k <= 40; ++k) {
      av(term, tmp);
      term = (unit / static_cast<double>(k)) * tmp;
      acc += term;
      if (term.norm() <= 1e-17 * acc.norm()) break;
    }
    v = acc;
  }
}

// Spectral norm (largest |eigenvalue|) of a Hermitian operator from its
// action, by Lanczos with full reorthogonalization.
template <class MatVec>
inline double lanczos_spectral_norm(const MatVec& av, Eigen::Index dim, int iters = 40,
                                    std::uint64_t seed = 2) {
  if (dim == 0) return 0.0;
  int mmax = static_cast<int>(std::min<Eigen::Index>(iters, dim));
  CounterRng rng{seed, 17};
  Eigen::VectorXcd v(dim);
  std::uint64_t ctr = 0;
  for (Eigen::Index j = 0; j < dim; ++j) {
    double re = rng.uniform(ctr++) - 0.5;
    double im = rng.uniform(ctr++) - 0.5;
    v[j] = cplx(re, im);
  }
  v.normalize();

  std::vector<Eigen::VectorXcd> basis;
  basis.reserve(static_cast<std::size_t>(mmax));
  std::vector<double> alpha, beta;  // T diagonal / subdiagonal
  Eigen::VectorXcd w(dim);
  for (int j = 0; j < mmax; ++j) {
    basis.push_back(v);
    av(v, w);
    double a = w.dot(v).real();  // ⟨Av, v⟩ — dot conjugates the left argument
    alpha.push_back(a);
    // Orthogonalize twice against the whole basis for stability.
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) w -= q.dot(w) * q;
    double b = w.norm();
    if (b <= 1e-14 * std::max(1.0, std::abs(a))) break;
    beta.push_back(b);
    v = w / b;
  }

  auto k = static_cast<Eigen::Index>(alpha.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    T(j, j) = alpha[static_cast<std::size_t>(j)];
    if (j + 1 < k) {
      T(j, j + 1) = beta[static_cast<std::size_t>(j)];
      T(j + 1, j) = beta[static_cast<std::size_t>(j)];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
  double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  return std::max(std::abs(lo), std::abs(hi));
}

}  // namespace blochlab
