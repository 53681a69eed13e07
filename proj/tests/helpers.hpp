#pragma once

// Shared helpers for the unit and acceptance suites: finite-difference
// oracles, random expression generators, and the metric-side Jacobi
// comparison harness.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "causalgeo/batch.hpp"
#include "causalgeo/catalog.hpp"
#include "causalgeo/io.hpp"
#include "causalgeo/oracle.hpp"

namespace causalgeo::testing {

// Central finite difference of f at x along variable var.
inline double central_diff(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> x, int var, double h) {
  x[static_cast<std::size_t>(var)] += h;
  double fp = f(x);
  x[static_cast<std::size_t>(var)] -= 2 * h;
  double fm = f(x);
  return (fp - fm) / (2 * h);
}

// Partial derivative oracle: one central difference per order, each level
// differentiating the exact jet-extracted partial one order below. This
// keeps every level at first-difference accuracy instead of compounding
// roundoff through higher-order stencils.
double fd_partial_oracle(const Ast& ast, const std::vector<std::string>& vars,
                         const std::vector<double>& at, const MultiIndex& alpha);

// Jet-extracted partial of an expression.
double jet_partial(const Ast& ast, const std::vector<std::string>& vars,
                   const std::vector<double>& at, const MultiIndex& alpha);

// Random smooth expression over the given variables (safe domains).
AstPtr random_expression(Rng& rng, const std::vector<std::string>& vars, int depth);

// Metric-side Jacobi tensor data matched to a causal trajectory: integrates
// affine null geodesics with vector Jacobi fields from the same initial
// data, reparametrized by x^n, and reads the shadow components through the
// trajectory's own coframes.
struct CrossValidation {
  double max_curve_mismatch = 0.0;  // sup-norm distance of base curves
  std::vector<OpticalSample> flow_optics;
  std::vector<OpticalSample> oracle_optics;
  // worst-case differences of the trace-free tidal over matched samples
  double max_eig_diff = 0.0;     // char-poly coefficient comparison
  double max_wsf_diff = 0.0;     // direct matrix difference (same frame)
};

CrossValidation cross_validate(const CausalStructure& s, const Metric& m,
                               const CPoint& p0, double t1, double tol,
                               int nsamples, double compare_from);

// Affine change of fiber chart y -> A y' + b applied to an expression-backed
// structure: F'(x; y') = F(x; A y' + b).
CausalStructure affine_fiber_change(const CausalStructure& s, const Mat& A,
                                    const std::vector<double>& b);

// Unsigned angle between two direction vectors, stable near zero (atan2 of
// the orthogonal residual, not acos of the cosine).
double angle_between(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace causalgeo::testing
