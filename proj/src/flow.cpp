#include "causalgeo/flow.hpp"

#include <algorithm>
#include <cmath>

#include "causalgeo/errors.hpp"

namespace causalgeo {

namespace {

constexpr double kChartBound = 1e3;

void check_chart(const std::vector<double>& state, int n) {
  for (double v : state)
    if (!std::isfinite(v))
      throw Error(ErrorKind::ChartExit, "state left the chart (non-finite)");
  for (std::size_t a = static_cast<std::size_t>(n + 1); a < static_cast<std::size_t>(2 * n); ++a)
    if (std::abs(state[a]) > kChartBound)
      throw Error(ErrorKind::ChartExit, "fiber coordinate left the chart");
}

CPoint state_to_point(const std::vector<double>& st, int n) {
  CPoint p;
  p.x.assign(st.begin(), st.begin() + n + 1);
  p.y.assign(st.begin() + n + 1, st.begin() + 2 * n);
  return p;
}

}  // namespace

Velocity characteristic_vector(const CausalStructure& s, const CPoint& p,
                               const double* branch_seed) {
  int n = s.n;
  int m = n - 1;
  Jet j = s.f_jet_xy(p, 2, branch_seed);
  int nv = 2 * n;
  auto dx = [&](int i) { return MultiIndex::unit(nv, i); };
  auto dy = [&](int a) { return MultiIndex::unit(nv, n + 1 + a); };

  Mat h(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) {
      double v = j.partial(dy(a).plus(dy(b)));
      h(a, b) = v;
      h(b, a) = v;
    }
  double f = j.value();
  double f0 = j.partial(dx(0));
  std::vector<double> rhs(static_cast<std::size_t>(m));
  for (int a = 0; a < m; ++a) {
    double v = -f * j.partial(dx(0).plus(dy(a)));
    for (int b = 0; b < m; ++b)
      v -= p.y[static_cast<std::size_t>(b)] * j.partial(dx(1 + b).plus(dy(a)));
    v += j.partial(dx(1 + a));
    v += f0 * j.partial(dy(a));
    v -= j.partial(dx(n).plus(dy(a)));
    rhs[static_cast<std::size_t>(a)] = v;
  }
  LuResult lu = lu_factor(h);
  if (lu.singular)
    throw Error(ErrorKind::TangentiallyDegenerate, "vertical Hessian is singular");
  Velocity vel;
  vel.ydot = lu_solve(lu, rhs);
  vel.xdot.resize(static_cast<std::size_t>(n + 1));
  vel.xdot[0] = f;
  for (int a = 0; a < m; ++a) vel.xdot[static_cast<std::size_t>(1 + a)] = p.y[static_cast<std::size_t>(a)];
  vel.xdot[static_cast<std::size_t>(n)] = 1.0;
  return vel;
}

FieldJet characteristic_field_jet(const CausalStructure& s, const CPoint& p,
                                  const double* branch_seed) {
  int n = s.n;
  int m = n - 1;
  int nv = 2 * n;
  Jet j3 = s.f_jet_xy(p, 3, branch_seed);

  auto d1 = [&](const Jet& j, int var) { return j.derivative(var); };
  int yv0 = n + 1;

  Jet f1 = truncate(j3, 1);
  std::vector<Jet> dxF, dyF;
  for (int i = 0; i <= n; ++i) dxF.push_back(truncate(d1(j3, i), 1));
  for (int a = 0; a < m; ++a) dyF.push_back(truncate(d1(j3, yv0 + a), 1));

  std::vector<std::vector<Jet>> h(static_cast<std::size_t>(m),
                                  std::vector<Jet>(static_cast<std::size_t>(m)));
  for (int a = 0; a < m; ++a) {
    Jet da = d1(j3, yv0 + a);
    for (int b = 0; b < m; ++b)
      h[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = truncate(d1(da, yv0 + b), 1);
  }
  std::vector<Jet> rhs;
  for (int a = 0; a < m; ++a) {
    Jet da = d1(j3, yv0 + a);
    Jet v = -(f1 * truncate(d1(da, 0), 1));
    for (int b = 0; b < m; ++b) {
      Jet yb = Jet::variable(yv0 + b, p.y[static_cast<std::size_t>(b)], nv, 1);
      v = v - yb * truncate(d1(da, 1 + b), 1);
    }
    v = v + dxF[static_cast<std::size_t>(1 + a)];
    v = v + dxF[0] * dyF[static_cast<std::size_t>(a)];
    v = v - truncate(d1(da, n), 1);
    rhs.push_back(v);
  }
  double hscale = 0.0;
  for (const auto& row : h)
    for (const auto& e : row) hscale = std::max(hscale, std::abs(e.value()));
  std::vector<Jet> A = solve_jet(h, rhs, 1e-13 * std::max(hscale, 1e-30));

  FieldJet out;
  out.v.assign(static_cast<std::size_t>(nv), 0.0);
  out.jac = Mat(nv, nv);
  auto fill = [&](int row, const Jet& comp) {
    out.v[static_cast<std::size_t>(row)] = comp.value();
    for (int c = 0; c < nv; ++c)
      out.jac(row, c) = comp.coeff(MultiIndex::unit(nv, c));
  };
  fill(0, f1);
  for (int a = 0; a < m; ++a)
    fill(1 + a, Jet::variable(yv0 + a, p.y[static_cast<std::size_t>(a)], nv, 1));
  fill(n, Jet::constant(1.0, nv, 1));
  for (int a = 0; a < m; ++a) fill(yv0 + a, A[static_cast<std::size_t>(a)]);
  return out;
}

// Dormand-Prince 5(4) tableau.
namespace dopri {
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace dopri

OdeResult integrate_ode(
    const std::function<void(double, const std::vector<double>&, std::vector<double>&)>& f,
    std::vector<double> y0, double t0, double t1, double rtol, double atol,
    const std::vector<double>& sample_ts, double max_step) {
  using std::abs;
  const std::size_t dim = y0.size();
  const double span = t1 - t0;
  if (span <= 0.0) throw Error(ErrorKind::BadInput, "empty integration span");
  if (max_step <= 0.0) max_step = span / 64.0;

  OdeResult out;
  out.states.resize(sample_ts.size());
  std::size_t next_sample = 0;

  std::vector<double> y = y0, k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim),
                      k7(dim), ytmp(dim), y5(dim), errv(dim);
  double t = t0;
  f(t, y, k1);
  // rtol >= 1 disables the controller: plain fixed steps of max_step
  double h = rtol >= 1.0 ? max_step : std::min(max_step, span / 100.0);

  auto hermite = [&](double ts, const std::vector<double>& ya,
                     const std::vector<double>& fa, const std::vector<double>& yb,
                     const std::vector<double>& fb, double ta, double hb,
                     std::vector<double>& dst) {
    double u = (ts - ta) / hb;
    double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
    double h10 = u * (1 - u) * (1 - u);
    double h01 = u * u * (3 - 2 * u);
    double h11 = u * u * (u - 1);
    dst.resize(dim);
    for (std::size_t i = 0; i < dim; ++i)
      dst[i] = h00 * ya[i] + h10 * hb * fa[i] + h01 * yb[i] + h11 * hb * fb[i];
  };

  while (t < t1 - 1e-14 * span) {
    if (h > max_step) h = max_step;
    if (t + h > t1) h = t1 - t;
    if (h < 1e-14 * span)
      throw Error(ErrorKind::StepSizeUnderflow, "step size underflow");

    for (std::size_t i = 0; i < dim; ++i) ytmp[i] = y[i] + h * dopri::a21 * k1[i];
    f(t + dopri::c2 * h, ytmp, k2);
    for (std::size_t i = 0; i < dim; ++i)
      ytmp[i] = y[i] + h * (dopri::a31 * k1[i] + dopri::a32 * k2[i]);
    f(t + dopri::c3 * h, ytmp, k3);
    for (std::size_t i = 0; i < dim; ++i)
      ytmp[i] = y[i] + h * (dopri::a41 * k1[i] + dopri::a42 * k2[i] + dopri::a43 * k3[i]);
    f(t + dopri::c4 * h, ytmp, k4);
    for (std::size_t i = 0; i < dim; ++i)
      ytmp[i] = y[i] + h * (dopri::a51 * k1[i] + dopri::a52 * k2[i] +
                            dopri::a53 * k3[i] + dopri::a54 * k4[i]);
    f(t + dopri::c5 * h, ytmp, k5);
    for (std::size_t i = 0; i < dim; ++i)
      ytmp[i] = y[i] + h * (dopri::a61 * k1[i] + dopri::a62 * k2[i] +
                            dopri::a63 * k3[i] + dopri::a64 * k4[i] + dopri::a65 * k5[i]);
    f(t + h, ytmp, k6);
    for (std::size_t i = 0; i < dim; ++i)
      y5[i] = y[i] + h * (dopri::b1 * k1[i] + dopri::b3 * k3[i] + dopri::b4 * k4[i] +
                          dopri::b5 * k5[i] + dopri::b6 * k6[i]);
    f(t + h, y5, k7);

    double err = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      double e = h * (dopri::e1 * k1[i] + dopri::e3 * k3[i] + dopri::e4 * k4[i] +
                      dopri::e5 * k5[i] + dopri::e6 * k6[i] + dopri::e7 * k7[i]);
      double sc = atol + rtol * std::max(abs(y[i]), abs(y5[i]));
      err = std::max(err, abs(e) / sc);
    }

    if (err <= 1.0) {
      // flush dense output over [t, t+h]
      while (next_sample < sample_ts.size() && sample_ts[next_sample] <= t + h + 1e-14 * span) {
        hermite(std::min(sample_ts[next_sample], t + h), y, k1, y5, k7, t, h,
                out.states[next_sample]);
        ++next_sample;
      }
      t += h;
      y = y5;
      k1 = k7;  // FSAL
      out.stats.accepted++;
      out.stats.max_error = std::max(out.stats.max_error, err);
    } else {
      out.stats.rejected++;
    }
    double fac = 0.9 * std::pow(err > 0 ? err : 1e-10, -0.2);
    fac = std::clamp(fac, 0.2, 5.0);
    h *= fac;
  }
  while (next_sample < sample_ts.size()) {
    out.states[next_sample] = y;
    ++next_sample;
  }
  out.stats.mean_dt = out.stats.accepted > 0 ? span / out.stats.accepted : span;
  return out;
}

Trajectory integrate_characteristic(const CausalStructure& s, const CPoint& p0,
                                    double t0, double t1, double tol,
                                    int nsamples, const Mat* frame_seed) {
  int n = s.n;
  s.validate();
  if (!(tol > 0.0)) throw Error(ErrorKind::BadInput, "tolerance must be positive");
  if (nsamples < 2) throw Error(ErrorKind::BadInput, "need at least two samples");

  // branch continuity for two-sheet cones
  double seed = s.f_value(p0);
  auto rhs = [&](double, const std::vector<double>& st, std::vector<double>& out) {
    check_chart(st, n);
    CPoint p = state_to_point(st, n);
    Velocity v = characteristic_vector(s, p, &seed);
    seed = v.xdot[0];
    out.resize(st.size());
    for (int i = 0; i <= n; ++i) out[static_cast<std::size_t>(i)] = v.xdot[static_cast<std::size_t>(i)];
    for (int a = 0; a < n - 1; ++a)
      out[static_cast<std::size_t>(n + 1 + a)] = v.ydot[static_cast<std::size_t>(a)];
  };

  std::vector<double> y0;
  y0.insert(y0.end(), p0.x.begin(), p0.x.end());
  y0.insert(y0.end(), p0.y.begin(), p0.y.end());

  std::vector<double> ts(static_cast<std::size_t>(nsamples));
  for (int i = 0; i < nsamples; ++i)
    ts[static_cast<std::size_t>(i)] = t0 + (t1 - t0) * i / (nsamples - 1);

  OdeResult ode = integrate_ode(rhs, y0, t0, t1, tol, 1e-12, ts,
                                (t1 - t0) / 256.0);

  Trajectory traj;
  traj.t0 = t0;
  traj.stats = ode.stats;
  traj.samples.reserve(ts.size());
  const Mat* seedT = frame_seed;
  double fseed = s.f_value(p0);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    CPoint p = state_to_point(ode.states[i], n);
    AdaptedCoframe cf = adapted_coframe(s, p, seedT, &fseed);
    fseed = cf.F;
    TrajectorySample smp;
    smp.state = CharState{ts[i], p.x, p.y};
    smp.cf = std::move(cf);
    traj.samples.push_back(std::move(smp));
    seedT = &traj.samples.back().cf.T;
  }
  return traj;
}

namespace {

// Centered differences on a uniform grid: 6th order in the interior (the
// Jacobi tensor behaves like 1/(t-t0) near the base point, so the extra
// orders matter), 4th order near the edges, one-sided at the ends.
std::vector<double> grid_derivative(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  std::vector<double> d(n, 0.0);
  if (n < 5) {
    for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i]) / h;
    if (n >= 2) d[n - 1] = d[n - 2];
    return d;
  }
  auto central4 = [&](std::size_t i) {
    return (-f[i + 2] + 8 * f[i + 1] - 8 * f[i - 1] + f[i - 2]) / (12 * h);
  };
  if (n >= 7) {
    for (std::size_t i = 3; i + 3 < n; ++i)
      d[i] = (-f[i - 3] + 9 * f[i - 2] - 45 * f[i - 1] + 45 * f[i + 1] -
              9 * f[i + 2] + f[i + 3]) /
             (60 * h);
    d[2] = central4(2);
    d[n - 3] = central4(n - 3);
  } else {
    for (std::size_t i = 2; i + 2 < n; ++i) d[i] = central4(i);
  }
  auto fwd = [&](std::size_t i) {
    return (-25 * f[i] + 48 * f[i + 1] - 36 * f[i + 2] + 16 * f[i + 3] - 3 * f[i + 4]) /
           (12 * h);
  };
  auto bwd = [&](std::size_t i) {
    return (25 * f[i] - 48 * f[i - 1] + 36 * f[i - 2] - 16 * f[i - 3] + 3 * f[i - 4]) /
           (12 * h);
  };
  d[0] = fwd(0);
  d[1] = fwd(1);
  d[n - 2] = bwd(n - 2);
  d[n - 1] = bwd(n - 1);
  return d;
}

std::vector<Mat> grid_derivative_mat(const std::vector<Mat>& ms, double h) {
  std::size_t n = ms.size();
  int r = ms[0].rows(), c = ms[0].cols();
  std::vector<Mat> out(n, Mat(r, c));
  std::vector<double> series(n);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) {
      for (std::size_t k = 0; k < n; ++k) series[k] = ms[k](i, j);
      std::vector<double> d = grid_derivative(series, h);
      for (std::size_t k = 0; k < n; ++k) out[k](i, j) = d[k];
    }
  return out;
}

}  // namespace

JacobiData jacobi_from_shadow(const Trajectory& traj, const std::vector<Mat>& V,
                              const std::vector<Mat>& Vdot) {
  const std::size_t ns = traj.samples.size();
  int m = V[0].rows();
  double h = traj.samples[1].state.t - traj.samples[0].state.t;

  std::vector<Mat> tinv(ns);
  for (std::size_t i = 0; i < ns; ++i) tinv[i] = traj.samples[i].cf.Tinv;
  std::vector<Mat> tinv_dot = grid_derivative_mat(tinv, h);

  JacobiData jd;
  jd.m = m;
  jd.A.resize(ns);
  jd.Adot.resize(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    jd.A[i] = tinv[i] * V[i];
    jd.Adot[i] = tinv_dot[i] * V[i] + tinv[i] * Vdot[i];
  }
  return jd;
}

JacobiData propagate_jacobi(const CausalStructure& s, const Trajectory& traj,
                            double tol) {
  int n = s.n;
  int m = n - 1;
  const std::size_t ns = traj.samples.size();
  if (ns < 2) throw Error(ErrorKind::BadInput, "trajectory too short");
  const int nvar = 2 * m;  // number of propagated variations
  const int dim = 2 * n;

  const AdaptedCoframe& cf0 = traj.samples[0].cf;
  const CPoint p0 = traj.samples[0].state.x.empty()
                        ? CPoint{}
                        : CPoint{traj.samples[0].state.x, traj.samples[0].state.y};

  // initial variations: m vertical (A' = I family), m horizontal (A = I family)
  std::vector<std::vector<double>> d0(static_cast<std::size_t>(nvar),
                                      std::vector<double>(static_cast<std::size_t>(dim), 0.0));
  for (int b = 0; b < m; ++b) {
    for (int a = 0; a < m; ++a)
      d0[static_cast<std::size_t>(b)][static_cast<std::size_t>(n + 1 + a)] = cf0.T(a, b);
  }
  for (int b = 0; b < m; ++b) {
    auto& dv = d0[static_cast<std::size_t>(m + b)];
    double dx0 = 0.0;
    for (int a = 0; a < m; ++a) {
      dv[static_cast<std::size_t>(1 + a)] = cf0.T(a, b);
      dx0 += cf0.gradF[static_cast<std::size_t>(a)] * cf0.T(a, b);
    }
    dv[0] = dx0;  // keeps omega0(delta) = 0 at t0
  }

  // joint system: base point plus all variations
  double seed = s.f_value(p0);
  auto rhs = [&](double, const std::vector<double>& st, std::vector<double>& out) {
    check_chart(st, n);
    CPoint p = state_to_point(st, n);
    FieldJet fj = characteristic_field_jet(s, p, &seed);
    seed = fj.v[0];
    out.assign(st.size(), 0.0);
    for (int i = 0; i < dim; ++i) out[static_cast<std::size_t>(i)] = fj.v[static_cast<std::size_t>(i)];
    for (int k = 0; k < nvar; ++k) {
      const std::size_t off = static_cast<std::size_t>(dim + k * dim);
      for (int i = 0; i < dim; ++i) {
        double v = 0.0;
        for (int j = 0; j < dim; ++j) v += fj.jac(i, j) * st[off + static_cast<std::size_t>(j)];
        out[off + static_cast<std::size_t>(i)] = v;
      }
    }
  };

  std::vector<double> y0;
  y0.insert(y0.end(), p0.x.begin(), p0.x.end());
  y0.insert(y0.end(), p0.y.begin(), p0.y.end());
  for (int k = 0; k < nvar; ++k)
    y0.insert(y0.end(), d0[static_cast<std::size_t>(k)].begin(), d0[static_cast<std::size_t>(k)].end());

  std::vector<double> ts;
  ts.reserve(ns);
  for (const auto& smp : traj.samples) ts.push_back(smp.state.t);
  double t0 = ts.front(), t1 = ts.back();
  OdeResult ode = integrate_ode(rhs, y0, t0, t1, tol, 1e-12, ts, (t1 - t0) / 256.0);

  // shadow components of the vertical family
  std::vector<Mat> V(ns, Mat(m, m)), Vdot(ns, Mat(m, m));
  JacobiData jd;
  jd.delta.resize(ns);
  jd.omega0.resize(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    const std::vector<double>& st = ode.states[i];
    CPoint p = state_to_point(st, n);
    Velocity vel = characteristic_vector(s, p);
    const AdaptedCoframe& cf = traj.samples[i].cf;
    jd.delta[i].resize(static_cast<std::size_t>(nvar));
    jd.omega0[i].resize(static_cast<std::size_t>(nvar));
    for (int k = 0; k < nvar; ++k) {
      const std::size_t off = static_cast<std::size_t>(dim + k * dim);
      std::vector<double> dlt(st.begin() + static_cast<std::ptrdiff_t>(off),
                              st.begin() + static_cast<std::ptrdiff_t>(off + static_cast<std::size_t>(dim)));
      double w0 = 0.0;
      for (int c = 0; c < dim; ++c) w0 += cf.W(0, c) * dlt[static_cast<std::size_t>(c)];
      jd.omega0[i][static_cast<std::size_t>(k)] = w0;
      if (k < m) {
        for (int a = 0; a < m; ++a) {
          double dxn = dlt[static_cast<std::size_t>(n)];
          V[i](a, k) = dlt[static_cast<std::size_t>(1 + a)] - p.y[static_cast<std::size_t>(a)] * dxn;
          Vdot[i](a, k) = dlt[static_cast<std::size_t>(n + 1 + a)] -
                          vel.ydot[static_cast<std::size_t>(a)] * dxn;
        }
      }
      jd.delta[i][static_cast<std::size_t>(k)] = std::move(dlt);
    }
  }

  JacobiData shaped = jacobi_from_shadow(traj, V, Vdot);
  jd.m = m;
  jd.A = std::move(shaped.A);
  jd.Adot = std::move(shaped.Adot);

  // omega0 drift relative to a magnitude scale per variation
  double drift = 0.0;
  for (int k = 0; k < nvar; ++k) {
    double scale = 1.0;
    for (std::size_t i = 0; i < ns; ++i) {
      double mag = 0.0;
      for (double c : jd.delta[i][static_cast<std::size_t>(k)]) mag = std::max(mag, std::abs(c));
      double wrow = 0.0;
      for (int c = 0; c < dim; ++c) wrow = std::max(wrow, std::abs(traj.samples[i].cf.W(0, c)));
      scale = std::max(scale, mag * wrow);
    }
    for (std::size_t i = 0; i < ns; ++i)
      drift = std::max(drift, std::abs(jd.omega0[i][static_cast<std::size_t>(k)] -
                                       jd.omega0[0][static_cast<std::size_t>(k)]) /
                                  scale);
  }
  jd.max_omega0_drift = drift;
  return jd;
}

std::vector<OpticalSample> optical_scalars(const CausalStructure& s,
                                           const Trajectory& traj,
                                           const JacobiData& jd,
                                           double exclusion_steps) {
  int m = jd.m;
  int p = s.signature.first;
  const std::size_t ns = traj.samples.size();
  double h = traj.samples[1].state.t - traj.samples[0].state.t;
  double window = exclusion_steps * std::max(traj.stats.mean_dt, h);
  Mat eps = signature_matrix(p, s.signature.second);

  std::vector<OpticalSample> out(ns);
  std::vector<char> ok(ns, 0);
  std::vector<Mat> B(ns, Mat(m, m));
  for (std::size_t i = 0; i < ns; ++i) {
    out[i].t = traj.samples[i].state.t;
    double dt = out[i].t - traj.t0;
    if (std::abs(dt) < window) continue;
    const Mat& A = jd.A[i];
    double detA = det(A);
    double an = A.frobenius();
    if (std::abs(detA) < 1e-10 * std::pow(std::max(an, 1e-15), m)) {
      out[i].conjugate = true;
      continue;
    }
    B[i] = jd.Adot[i] * inverse(A);
    ok[i] = 1;
  }

  // theta and B' by the same stencils over the valid contiguous tail
  std::size_t first_ok = ns;
  for (std::size_t i = 0; i < ns; ++i)
    if (ok[i]) {
      first_ok = i;
      break;
    }
  if (first_ok == ns) return out;
  std::size_t last_ok = first_ok;
  while (last_ok + 1 < ns && ok[last_ok + 1]) ++last_ok;
  std::size_t cnt = last_ok - first_ok + 1;
  if (cnt < 5) return out;

  std::vector<Mat> bwin(B.begin() + static_cast<std::ptrdiff_t>(first_ok),
                        B.begin() + static_cast<std::ptrdiff_t>(last_ok + 1));
  std::vector<Mat> bdot = grid_derivative_mat(bwin, h);
  std::vector<double> th(cnt);
  for (std::size_t k = 0; k < cnt; ++k) th[k] = bwin[k].trace();
  std::vector<double> thdot = grid_derivative(th, h);

  // the outermost two samples on each side carry one-sided stencils, which
  // amplify integrator roundoff; keep them out of the reported series
  std::size_t lo = cnt > 8 ? 2 : 0;
  std::size_t hi = cnt > 8 ? cnt - 2 : cnt;
  for (std::size_t k = lo; k < hi; ++k) {
    std::size_t i = first_ok + k;
    OpticalSample& o = out[i];
    o.valid = true;
    const Mat& b = bwin[k];
    o.B = b;
    o.theta = th[k];
    Mat bstar = eps * b.transpose() * eps;
    Mat omega = (b - bstar) * 0.5;
    Mat sigma = (b + bstar) * 0.5;
    for (int d = 0; d < m; ++d) sigma(d, d) -= o.theta / m;
    o.omega2 = (omega * omega).trace();
    o.sigma2 = (sigma * sigma).trace();
    Mat r = (bdot[k] + b * b) * -1.0;
    o.tidal = r;
    o.pnn = r.trace() / m;
    // The genuine shadow flag curvature is eps-symmetric; the antisymmetric
    // residue of the measured tidal is the rotation rate of the seeded frame
    // against a parallel one and is dropped from the WSF part.
    Mat rsym = (r + eps * r.transpose() * eps) * 0.5;
    o.wsf = rsym;
    for (int d = 0; d < m; ++d) o.wsf(d, d) -= o.pnn;
    o.wsf_norm = o.wsf.frobenius();
    o.raych_residual =
        thdot[k] + m * o.pnn + o.omega2 + o.sigma2 + o.theta * o.theta / m;
  }
  return out;
}

}  // namespace causalgeo
