#pragma once

// Linear solvers for the packed symmetric stiffness systems: a Cholesky
// direct solve (LAPACK dpptrf/dpptrs) and a conjugate-gradient fallback
// (BLAS dspmv products). Row-major packed upper-triangle storage has the
// same byte layout as column-major packed lower triangle, so the factor
// routines run on the matrix as stored with uplo = 'L'.

#include <cblas.h>
#include <lapacke.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fraclab/assembly.hpp"

namespace fraclab {

struct SolveReport {
  std::vector<double> u;
  bool ok = false;
  double rel_residual = 0.0;  // max-norm of F - A u over max-norm of F
  int iterations = 0;         // CG only; 0 for the direct solve
};

namespace detail {

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double residual_max_norm(const PackedSymMatrix& a, const std::vector<double>& u,
                                const std::vector<double>& f) {
  std::vector<double> au;
  a.multiply(u, au);
  double r = 0.0;
  for (size_t i = 0; i < f.size(); ++i) r = std::max(r, std::abs(f[i] - au[i]));
  return r;
}

}  // namespace detail

// Cholesky factor of a packed SPD matrix, reusable across right-hand sides.
// Mid-sized systems are unpacked to full storage so the blocked dpotrf runs
// (the packed dpptrf is a level-2 routine, several times slower for n in the
// thousands); very large systems stay packed to halve the memory footprint.
struct CholeskyFactor {
  int n = 0;
  std::vector<double> ap;  // packed or full factor, column-major 'L'
  bool full = false;
  bool ok = false;

  static CholeskyFactor compute(const PackedSymMatrix& a) {
    CholeskyFactor f;
    f.n = a.n;
    f.full = a.n >= 512 && a.n <= 16000;
    if (f.full) {
      f.ap.assign(static_cast<size_t>(a.n) * static_cast<size_t>(a.n), 0.0);
      size_t k = 0;  // packed order (c ascending, r = c..n-1) is contiguous
      for (int c = 0; c < a.n; ++c)
        for (int r = c; r < a.n; ++r)
          f.ap[static_cast<size_t>(r) + static_cast<size_t>(c) * static_cast<size_t>(a.n)] =
              a.data[k++];
      f.ok = LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', a.n, f.ap.data(), a.n) == 0;
    } else {
      f.ap = a.data;
      f.ok = LAPACKE_dpptrf(LAPACK_COL_MAJOR, 'L', a.n, f.ap.data()) == 0;
    }
    return f;
  }

  std::vector<double> solve(const std::vector<double>& rhs) const {
    if (!ok) throw std::logic_error("CholeskyFactor::solve: factorization failed");
    if (static_cast<int>(rhs.size()) != n)
      throw std::invalid_argument("CholeskyFactor::solve: size mismatch");
    std::vector<double> u = rhs;
    const lapack_int info =
        full ? LAPACKE_dpotrs(LAPACK_COL_MAJOR, 'L', n, 1, ap.data(), n, u.data(), n)
             : LAPACKE_dpptrs(LAPACK_COL_MAJOR, 'L', n, 1, ap.data(), u.data(), n);
    if (info != 0) throw std::logic_error("CholeskyFactor::solve: triangular solve failed");
    return u;
  }
};

inline SolveReport solve_direct(const PackedSymMatrix& a, const std::vector<double>& f) {
  if (static_cast<int>(f.size()) != a.n)
    throw std::invalid_argument("solve_direct: size mismatch");
  SolveReport rep;
  const CholeskyFactor fac = CholeskyFactor::compute(a);
  if (!fac.ok) return rep;  // not SPD as factored: report ok = false
  rep.u = fac.solve(f);
  const double fn = detail::max_abs(f);
  rep.rel_residual = detail::residual_max_norm(a, rep.u, f) / (fn > 0.0 ? fn : 1.0);
  rep.ok = true;
  return rep;
}

// Conjugate gradients on the packed matrix; tol is relative to the 2-norm of
// f. Independent of the Cholesky path, used to cross-check solutions.
inline SolveReport solve_cg(const PackedSymMatrix& a, const std::vector<double>& f,
                            double tol = 1e-12, int max_iter = 0) {
  if (static_cast<int>(f.size()) != a.n)
    throw std::invalid_argument("solve_cg: size mismatch");
  const int n = a.n;
  if (max_iter <= 0) max_iter = 40 * n + 200;
  SolveReport rep;
  rep.u.assign(static_cast<size_t>(n), 0.0);
  std::vector<double> r = f;
  std::vector<double> p = r;
  std::vector<double> ap(static_cast<size_t>(n));
  auto dot2 = [n](const std::vector<double>& x, const std::vector<double>& y) {
    return cblas_ddot(n, x.data(), 1, y.data(), 1);
  };
  const double f2 = std::sqrt(dot2(f, f));
  if (f2 == 0.0) {  // zero data: the zero vector solves exactly
    rep.ok = true;
    return rep;
  }
  double rr = dot2(r, r);
  for (int it = 0; it < max_iter; ++it) {
    cblas_dspmv(CblasColMajor, CblasLower, n, 1.0, a.data.data(), p.data(), 1, 0.0, ap.data(), 1);
    const double pap = dot2(p, ap);
    if (!(pap > 0.0)) break;  // not positive definite along p
    const double alpha = rr / pap;
    cblas_daxpy(n, alpha, p.data(), 1, rep.u.data(), 1);
    cblas_daxpy(n, -alpha, ap.data(), 1, r.data(), 1);
    const double rr_new = dot2(r, r);
    rep.iterations = it + 1;
    if (std::sqrt(rr_new) <= tol * f2) {
      rep.ok = true;
      break;
    }
    const double beta = rr_new / rr;
    rr = rr_new;
    for (int i = 0; i < n; ++i)
      p[static_cast<size_t>(i)] = r[static_cast<size_t>(i)] + beta * p[static_cast<size_t>(i)];
  }
  const double fn = detail::max_abs(f);
  rep.rel_residual = detail::residual_max_norm(a, rep.u, f) / (fn > 0.0 ? fn : 1.0);
  return rep;
}

// Quadratic form u' A v through the packed product.
inline double energy_product(const PackedSymMatrix& a, const std::vector<double>& u,
                             const std::vector<double>& v) {
  std::vector<double> av;
  a.multiply(v, av);
  return cblas_ddot(a.n, u.data(), 1, av.data(), 1);
}

// Smallest eigenvalue estimate by inverse power iteration on the Cholesky
// factor; used to confirm discrete coercivity on small systems.
inline double smallest_eigenvalue(const PackedSymMatrix& a, int iters = 200) {
  const CholeskyFactor fac = CholeskyFactor::compute(a);
  if (!fac.ok) return -1.0;  // indefinite or singular as factored
  std::vector<double> x(static_cast<size_t>(a.n), 1.0);
  double lambda = 0.0;
  for (int k = 0; k < iters; ++k) {
    std::vector<double> y = fac.solve(x);
    const double yn = std::sqrt(cblas_ddot(a.n, y.data(), 1, y.data(), 1));
    if (yn == 0.0) break;
    for (double& v : y) v /= yn;
    std::vector<double> ay;
    a.multiply(y, ay);
    lambda = cblas_ddot(a.n, y.data(), 1, ay.data(), 1);
    x = std::move(y);
  }
  return lambda;
}

}  // namespace fraclab
