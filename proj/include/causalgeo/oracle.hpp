#pragma once

#include <map>
#include <string>
#include <vector>

#include "causalgeo/flow.hpp"
#include "causalgeo/geometry.hpp"

namespace causalgeo {

struct Metric {
  int dim = 4;                          // n + 1
  std::pair<int, int> signature{2, 2};  // of the metric itself
  std::string name;
  std::vector<AstPtr> comp;  // dim*dim, symmetrized at evaluation
  std::map<std::string, double> consts;

  const AstPtr& at(int i, int j) const { return comp[static_cast<std::size_t>(i * dim + j)]; }
  Mat eval(const std::vector<double>& x) const;
  std::vector<std::vector<Jet>> eval_jets(const std::vector<double>& x, int order) const;
};

// Entries keyed "gij" (i <= j); missing entries are zero.
Metric metric_from_entries(int dim, std::pair<int, int> sig,
                           const std::map<std::string, std::string>& entries,
                           std::map<std::string, double> consts, std::string name);

struct CurvatureAtPoint {
  int dim = 0;
  Mat g, ginv;
  std::vector<double> gamma;  // [k][i][j]
  std::vector<double> rup;    // R^a_{jkl}: R(e_k,e_l)e_j = R^a_jkl e_a
  std::vector<double> rstd;   // R_ijkl = g(R(e_i,e_j)e_k, e_l)
  Mat ricci;
  double scalar = 0.0;
  Mat schouten;
  std::vector<double> weyl;   // same layout as rstd

  double gamma_at(int k, int i, int j) const {
    return gamma[static_cast<std::size_t>((k * dim + i) * dim + j)];
  }
  double rup_at(int a, int j, int k, int l) const {
    return rup[static_cast<std::size_t>(((a * dim + j) * dim + k) * dim + l)];
  }
  double rstd_at(int i, int j, int k, int l) const {
    return rstd[static_cast<std::size_t>(((i * dim + j) * dim + k) * dim + l)];
  }
  double weyl_at(int i, int j, int k, int l) const {
    return weyl[static_cast<std::size_t>(((i * dim + j) * dim + k) * dim + l)];
  }
  double riemann_norm() const;
  double weyl_norm() const;
  double ricci_norm() const;
};

CurvatureAtPoint curvature(const Metric& m, const std::vector<double>& x);

// Christoffel values only (cheaper; used inside integrators).
std::vector<double> christoffel(const Metric& m, const std::vector<double>& x);

double metric_pairing(const Mat& g, const std::vector<double>& u,
                      const std::vector<double>& v);

struct OracleTrajectory {
  std::vector<double> s;                  // affine parameter
  std::vector<std::vector<double>> x, v;  // per sample
  std::vector<double> null_norm;          // g(v,v) drift
  IntegratorStats stats;
};

OracleTrajectory null_geodesic(const Metric& m, const std::vector<double>& x0,
                               const std::vector<double>& v0, double s1,
                               double tol, int nsamples = 401);

// Screen frame parallel-transported along an affine null geodesic; tidal
// operator components R(e_a, xdot, xdot, e_b) with the screen metric used to
// raise the first index.
struct DeviationSeries {
  std::vector<double> s;
  std::vector<std::vector<double>> x, v;
  std::vector<Mat> frames;      // dim x m, columns are screen vectors
  std::vector<Mat> tidal;       // m x m operator
  std::vector<Mat> tidal_tracefree;
  std::vector<double> trace;
  Mat screen_gram0;
  IntegratorStats stats;
};

DeviationSeries geodesic_deviation(const Metric& m, const std::vector<double>& x0,
                                   const std::vector<double>& v0, double s1,
                                   double tol, int nsamples = 401);

// Null geodesic re-parametrized by a coordinate (dx^coord/dt == 1), carrying
// vector Jacobi fields J'' = -R(J, v)v with J(t0) = 0 and dJ/dt(t0) given.
struct CoordinateJacobiRun {
  std::vector<double> t;
  std::vector<std::vector<double>> x, v;                  // v is the affine velocity
  std::vector<std::vector<std::vector<double>>> J;        // [sample][field][dim]
  std::vector<std::vector<std::vector<double>>> Jdot;     // dJ/dt
  std::vector<std::vector<double>> vdot;                  // dv/dt per sample
  IntegratorStats stats;
};

CoordinateJacobiRun null_geodesic_jacobi_by_coordinate(
    const Metric& m, const std::vector<double>& x0, const std::vector<double>& v0,
    int coord, const std::vector<double>& tgrid,
    const std::vector<std::vector<double>>& jdot0, double tol);

// Defining function solved from g_ij y^i y^j = 0 with y^n = 1; the branch is
// chosen nearest to a seed (or nearest zero, ties to the upper root).
CausalStructure graph_from_metric(const Metric& m, std::string name = "");

}  // namespace causalgeo
