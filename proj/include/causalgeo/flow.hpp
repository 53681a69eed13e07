#pragma once

#include <functional>
#include <vector>

#include "causalgeo/geometry.hpp"
#include "causalgeo/linalg.hpp"

namespace causalgeo {

struct CharState {
  double t = 0.0;
  std::vector<double> x;
  std::vector<double> y;
};

struct Velocity {
  std::vector<double> xdot;
  std::vector<double> ydot;
};

// dx0 = F, dx^a = y^a, dx^n = 1, with H ydot = rhs from the cone data.
Velocity characteristic_vector(const CausalStructure& s, const CPoint& p,
                               const double* branch_seed = nullptr);

// Field value plus its Jacobian with respect to the 2n chart variables.
struct FieldJet {
  std::vector<double> v;  // 2n
  Mat jac;                // 2n x 2n
};
FieldJet characteristic_field_jet(const CausalStructure& s, const CPoint& p,
                                  const double* branch_seed = nullptr);

struct IntegratorStats {
  int accepted = 0;
  int rejected = 0;
  double max_error = 0.0;
  double mean_dt = 0.0;
};

// Adaptive embedded Runge-Kutta 5(4), Dormand-Prince coefficients, with
// cubic Hermite dense output onto the requested sample times.
struct OdeResult {
  std::vector<std::vector<double>> states;  // one per sample time
  IntegratorStats stats;
};
OdeResult integrate_ode(
    const std::function<void(double, const std::vector<double>&, std::vector<double>&)>& f,
    std::vector<double> y0, double t0, double t1, double rtol, double atol,
    const std::vector<double>& sample_ts, double max_step = 0.0);

struct TrajectorySample {
  CharState state;
  AdaptedCoframe cf;
};

struct Trajectory {
  double t0 = 0.0;
  std::vector<TrajectorySample> samples;
  IntegratorStats stats;
};

// frame_seed, when given, seeds the first coframe normalization; the chain
// stays continuous from there. Useful for pinning the residual gauge.
Trajectory integrate_characteristic(const CausalStructure& s, const CPoint& p0,
                                    double t0, double t1, double tol,
                                    int nsamples = 401,
                                    const Mat* frame_seed = nullptr);

struct JacobiData {
  int m = 0;  // n - 1
  // vertical family: A(t0) = 0, A'(t0) = I in the t0 coframe
  std::vector<Mat> A;
  std::vector<Mat> Adot;
  // raw variation vectors, per sample then per variation (2m of them)
  std::vector<std::vector<std::vector<double>>> delta;
  // omega0(delta) per sample per variation
  std::vector<std::vector<double>> omega0;
  // drift of omega0(delta) relative to a per-sample magnitude scale
  double max_omega0_drift = 0.0;
};

JacobiData propagate_jacobi(const CausalStructure& s, const Trajectory& traj,
                            double tol);

struct OpticalSample {
  double t = 0.0;
  bool valid = false;
  bool conjugate = false;
  double theta = 0.0;
  double omega2 = 0.0;
  double sigma2 = 0.0;
  double pnn = 0.0;
  double wsf_norm = 0.0;
  double raych_residual = 0.0;
  Mat wsf;
  Mat tidal;  // R = -(B' + B^2)
  Mat B;
};

// exclusion_steps fixes the window around t0 (in units of the mean accepted
// step) where B ~ I/(t-t0) makes the scalars meaningless.
std::vector<OpticalSample> optical_scalars(const CausalStructure& s,
                                           const Trajectory& traj,
                                           const JacobiData& jd,
                                           double exclusion_steps = 10.0);

// Assemble Jacobi-tensor data from per-sample shadow components V and their
// t-derivatives (columns are the individual fields). Used both internally
// and by the metric-side cross validation, so both routes share the frame
// bookkeeping exactly.
JacobiData jacobi_from_shadow(const Trajectory& traj, const std::vector<Mat>& V,
                              const std::vector<Mat>& Vdot);

}  // namespace causalgeo
