#include "nbf/hermitian_eig.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nbf {

HermitianEig hermitian_eig(const cdouble* a_in, int dim) {
  NBF_REQUIRE(dim >= 1, "eig: empty matrix");
  std::vector<cdouble> a(a_in, a_in + size_t(dim) * size_t(dim));
  std::vector<cdouble> v(size_t(dim) * size_t(dim), cdouble(0, 0));
  for (int i = 0; i < dim; ++i) v[size_t(i) * size_t(dim) + size_t(i)] = 1.0;

  auto at = [&](std::vector<cdouble>& m, int i, int j) -> cdouble& {
    return m[size_t(i) * size_t(dim) + size_t(j)];
  };

  double norm = 0.0;
  for (const cdouble& x : a) norm += std::norm(x);
  norm = std::sqrt(norm);
  const double tol = 1e-15 * std::max(norm, 1e-300);

  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < dim; ++p)
      for (int q = p + 1; q < dim; ++q) off += std::norm(at(a, p, q));
    if (std::sqrt(2.0 * off) <= tol) break;

    for (int p = 0; p < dim; ++p) {
      for (int q = p + 1; q < dim; ++q) {
        const cdouble apq = at(a, p, q);
        const double mag = std::abs(apq);
        if (mag <= tol / dim) continue;
        const double app = at(a, p, p).real(), aqq = at(a, q, q).real();
        const cdouble phase = apq / mag;  // e^{i phi}
        const double tau = (aqq - app) / (2.0 * mag);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const cdouble s = std::conj(phase) * (t * c);

        // rows/cols k not in {p, q}
        for (int k = 0; k < dim; ++k) {
          if (k == p || k == q) continue;
          const cdouble akp = at(a, k, p), akq = at(a, k, q);
          at(a, k, p) = c * akp + s * akq;
          at(a, k, q) = -std::conj(s) * akp + c * akq;
          at(a, p, k) = std::conj(at(a, k, p));
          at(a, q, k) = std::conj(at(a, k, q));
        }
        const double tc2 = t * c * c;
        at(a, p, p) = app * c * c + aqq * t * t * c * c + 2.0 * mag * tc2;
        at(a, q, q) = app * t * t * c * c + aqq * c * c - 2.0 * mag * tc2;
        at(a, p, q) = 0.0;
        at(a, q, p) = 0.0;

        for (int k = 0; k < dim; ++k) {
          const cdouble vkp = at(v, k, p), vkq = at(v, k, q);
          at(v, k, p) = c * vkp + s * vkq;
          at(v, k, q) = -std::conj(s) * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(static_cast<size_t>(dim));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    return at(a, i, i).real() < at(a, j, j).real();
  });

  HermitianEig out;
  out.eigenvalues.resize(size_t(dim));
  out.vectors.resize(size_t(dim) * size_t(dim));
  for (int k = 0; k < dim; ++k) {
    out.eigenvalues[size_t(k)] = at(a, order[size_t(k)], order[size_t(k)]).real();
    for (int i = 0; i < dim; ++i)
      out.vectors[size_t(i) * size_t(dim) + size_t(k)] = at(v, i, order[size_t(k)]);
  }
  return out;
}

void cholesky(std::vector<cdouble>& a, int dim) {
  double max_pivot = 0.0;
  for (int j = 0; j < dim; ++j) {
    double d = a[size_t(j) * size_t(dim) + size_t(j)].real();
    for (int k = 0; k < j; ++k) d -= std::norm(a[size_t(j) * size_t(dim) + size_t(k)]);
    if (!(d > 0.0)) {
      throw Error("cholesky: non-positive pivot " + std::to_string(d) + " at index " +
                  std::to_string(j) + " (largest pivot so far " + std::to_string(max_pivot) +
                  "); matrix is numerically singular");
    }
    max_pivot = std::max(max_pivot, d);
    const double ljj = std::sqrt(d);
    a[size_t(j) * size_t(dim) + size_t(j)] = ljj;
    for (int i = j + 1; i < dim; ++i) {
      cdouble sum = a[size_t(i) * size_t(dim) + size_t(j)];
      for (int k = 0; k < j; ++k)
        sum -= a[size_t(i) * size_t(dim) + size_t(k)] *
               std::conj(a[size_t(j) * size_t(dim) + size_t(k)]);
      a[size_t(i) * size_t(dim) + size_t(j)] = sum / ljj;
    }
    for (int k = j + 1; k < dim; ++k) a[size_t(j) * size_t(dim) + size_t(k)] = 0.0;
  }
}

void solve_lower(const std::vector<cdouble>& l, int dim, std::vector<cdouble>& b) {
  for (int i = 0; i < dim; ++i) {
    cdouble sum = b[size_t(i)];
    for (int k = 0; k < i; ++k) sum -= l[size_t(i) * size_t(dim) + size_t(k)] * b[size_t(k)];
    b[size_t(i)] = sum / l[size_t(i) * size_t(dim) + size_t(i)];
  }
}

void solve_lower_adjoint(const std::vector<cdouble>& l, int dim, std::vector<cdouble>& b) {
  for (int i = dim - 1; i >= 0; --i) {
    cdouble sum = b[size_t(i)];
    for (int k = i + 1; k < dim; ++k)
      sum -= std::conj(l[size_t(k) * size_t(dim) + size_t(i)]) * b[size_t(k)];
    b[size_t(i)] = sum / l[size_t(i) * size_t(dim) + size_t(i)].real();
  }
}

void fix_phase(std::vector<cdouble>& v) {
  double nrm = 0.0;
  for (const cdouble& x : v) nrm += std::norm(x);
  nrm = std::sqrt(nrm);
  if (nrm <= 0.0) return;
  cdouble rot(1.0, 0.0);
  for (const cdouble& x : v) {
    if (std::abs(x) > 1e-12) {
      rot = std::conj(x) / std::abs(x);
      break;
    }
  }
  for (cdouble& x : v) x *= rot / nrm;
}

}  // namespace nbf
