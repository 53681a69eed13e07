#include "causalgeo/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "causalgeo/errors.hpp"

namespace causalgeo {

Mat Metric::eval(const std::vector<double>& x) const {
  std::map<std::string, double> env;
  for (int i = 0; i < dim; ++i) env["x" + std::to_string(i)] = x[static_cast<std::size_t>(i)];
  for (const auto& [k, v] : consts) env[k] = v;
  Mat g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      double v = comp[static_cast<std::size_t>(i * dim + j)]
                     ? eval_real(*comp[static_cast<std::size_t>(i * dim + j)], env)
                     : 0.0;
      g(i, j) = v;
    }
  // symmetrize
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) {
      double v = 0.5 * (g(i, j) + g(j, i));
      g(i, j) = g(j, i) = v;
    }
  return g;
}

std::vector<std::vector<Jet>> Metric::eval_jets(const std::vector<double>& x,
                                                int order) const {
  std::map<std::string, Jet> env;
  for (int i = 0; i < dim; ++i)
    env["x" + std::to_string(i)] = Jet::variable(i, x[static_cast<std::size_t>(i)], dim, order);
  for (const auto& [k, v] : consts) env[k] = Jet::constant(v, dim, order);
  Jet zero = Jet::constant(0.0, dim, order);
  std::vector<std::vector<Jet>> g(static_cast<std::size_t>(dim),
                                  std::vector<Jet>(static_cast<std::size_t>(dim), zero));
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      if (comp[static_cast<std::size_t>(i * dim + j)])
        g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            eval_jet(*comp[static_cast<std::size_t>(i * dim + j)], env);
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) {
      Jet v = (g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +
               g[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) *
              0.5;
      g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = v;
      g[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = v;
    }
  return g;
}

Metric metric_from_entries(int dim, std::pair<int, int> sig,
                           const std::map<std::string, std::string>& entries,
                           std::map<std::string, double> consts, std::string name) {
  Metric m;
  m.dim = dim;
  m.signature = sig;
  m.name = std::move(name);
  m.consts = std::move(consts);
  m.comp.assign(static_cast<std::size_t>(dim * dim), nullptr);
  std::set<std::string> allowed;
  for (int i = 0; i < dim; ++i) allowed.insert("x" + std::to_string(i));
  for (const auto& [k, v] : m.consts) allowed.insert(k);
  for (const auto& [key, text] : entries) {
    if (key.size() < 3 || key[0] != 'g')
      throw Error(ErrorKind::BadInput, "bad metric entry key '" + key + "'");
    int i = key[1] - '0';
    int j = key[2] - '0';
    if (key.size() != 3 || i < 0 || i >= dim || j < 0 || j >= dim || i > j)
      throw Error(ErrorKind::BadInput, "bad metric entry key '" + key + "'");
    AstPtr a = parse(text);
    if (!uses_only(*a, allowed))
      throw Error(ErrorKind::BadInput,
                  "metric entry " + key + " uses undeclared identifiers");
    m.comp[static_cast<std::size_t>(i * dim + j)] = a;
    m.comp[static_cast<std::size_t>(j * dim + i)] = a;
  }
  return m;
}

double CurvatureAtPoint::riemann_norm() const {
  double s = 0.0;
  for (double v : rstd) s += v * v;
  return std::sqrt(s);
}
double CurvatureAtPoint::weyl_norm() const {
  double s = 0.0;
  for (double v : weyl) s += v * v;
  return std::sqrt(s);
}
double CurvatureAtPoint::ricci_norm() const { return ricci.frobenius(); }

namespace {

std::vector<std::vector<Jet>> invert_jet_matrix(const std::vector<std::vector<Jet>>& g,
                                                double tol) {
  int d = static_cast<int>(g.size());
  const Jet& probe = g[0][0];
  std::vector<std::vector<Jet>> cols;
  for (int c = 0; c < d; ++c) {
    std::vector<Jet> rhs;
    for (int i = 0; i < d; ++i)
      rhs.push_back(Jet::constant(i == c ? 1.0 : 0.0, probe.nvars(), probe.order()));
    std::vector<std::vector<Jet>> a = g;
    try {
      cols.push_back(std::vector<Jet>());
      cols.back() = solve_jet(a, rhs, tol);
    } catch (const Error&) {
      throw Error(ErrorKind::DegenerateMetric, "metric is degenerate at the query point");
    }
  }
  std::vector<std::vector<Jet>> inv(static_cast<std::size_t>(d),
                                    std::vector<Jet>(static_cast<std::size_t>(d), probe));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      inv[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
  return inv;
}

}  // namespace

std::vector<double> christoffel(const Metric& m, const std::vector<double>& x) {
  int d = m.dim;
  auto g = m.eval_jets(x, 1);
  double scale = 0.0;
  for (auto& row : g)
    for (auto& e : row) scale = std::max(scale, std::abs(e.value()));
  auto ginv = invert_jet_matrix(g, 1e-13 * std::max(scale, 1e-30));
  std::vector<double> gam(static_cast<std::size_t>(d * d * d), 0.0);
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        double v = 0.0;
        for (int l = 0; l < d; ++l) {
          double dgi = g[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)].coeff(
              MultiIndex::unit(d, i));
          double dgj = g[static_cast<std::size_t>(l)][static_cast<std::size_t>(i)].coeff(
              MultiIndex::unit(d, j));
          double dgl = g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].coeff(
              MultiIndex::unit(d, l));
          v += 0.5 * ginv[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)].value() *
               (dgi + dgj - dgl);
        }
        gam[static_cast<std::size_t>((k * d + i) * d + j)] = v;
        gam[static_cast<std::size_t>((k * d + j) * d + i)] = v;
      }
  return gam;
}

CurvatureAtPoint curvature(const Metric& m, const std::vector<double>& x) {
  int d = m.dim;
  CurvatureAtPoint cp;
  cp.dim = d;
  auto gj = m.eval_jets(x, 2);
  double scale = 0.0;
  for (auto& row : gj)
    for (auto& e : row) scale = std::max(scale, std::abs(e.value()));
  auto ginvj = invert_jet_matrix(gj, 1e-13 * std::max(scale, 1e-30));

  cp.g = Mat(d, d);
  cp.ginv = Mat(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      cp.g(i, j) = gj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].value();
      cp.ginv(i, j) = ginvj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].value();
    }

  // Christoffel symbols as order-1 jets
  Jet zero1 = Jet::constant(0.0, d, 1);
  std::vector<Jet> gamj(static_cast<std::size_t>(d * d * d), zero1);
  auto gam_at = [&](int k, int i, int j) -> Jet& {
    return gamj[static_cast<std::size_t>((k * d + i) * d + j)];
  };
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        Jet v = zero1;
        for (int l = 0; l < d; ++l) {
          Jet term = gj[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)].derivative(i) +
                     gj[static_cast<std::size_t>(l)][static_cast<std::size_t>(i)].derivative(j) -
                     gj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].derivative(l);
          v = v + truncate(ginvj[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)], 1) * term * 0.5;
        }
        gam_at(k, i, j) = v;
        gam_at(k, j, i) = v;
      }

  cp.gamma.assign(static_cast<std::size_t>(d * d * d), 0.0);
  for (std::size_t i = 0; i < gamj.size(); ++i) cp.gamma[i] = gamj[i].value();

  // R^a_{jkl} = d_k Gamma^a_{lj} - d_l Gamma^a_{kj} + Gamma^a_{km} Gamma^m_{lj}
  //             - Gamma^a_{lm} Gamma^m_{kj}
  cp.rup.assign(static_cast<std::size_t>(d * d * d * d), 0.0);
  auto rup_ref = [&](int a, int j, int k, int l) -> double& {
    return cp.rup[static_cast<std::size_t>(((a * d + j) * d + k) * d + l)];
  };
  for (int a = 0; a < d; ++a)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          double v = gam_at(a, l, j).coeff(MultiIndex::unit(d, k)) -
                     gam_at(a, k, j).coeff(MultiIndex::unit(d, l));
          for (int mm = 0; mm < d; ++mm)
            v += gam_at(a, k, mm).value() * gam_at(mm, l, j).value() -
                 gam_at(a, l, mm).value() * gam_at(mm, k, j).value();
          rup_ref(a, j, k, l) = v;
        }

  // fully lowered tensor with the first slot lowered in place,
  // R_ijkl = g_ia R^a_jkl; Ricci is then the (1,3) trace and the Weyl part
  // splits off as R = W + Schouten ^ g
  cp.rstd.assign(static_cast<std::size_t>(d * d * d * d), 0.0);
  auto rstd_ref = [&](int i, int j, int k, int l) -> double& {
    return cp.rstd[static_cast<std::size_t>(((i * d + j) * d + k) * d + l)];
  };
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          double v = 0.0;
          for (int a = 0; a < d; ++a) v += cp.g(i, a) * rup_ref(a, j, k, l);
          rstd_ref(i, j, k, l) = v;
        }

  // Ric_{jk} = R^a_{k a j}
  cp.ricci = Mat(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      double v = 0.0;
      for (int a = 0; a < d; ++a) v += rup_ref(a, k, a, j);
      cp.ricci(j, k) = v;
    }
  cp.scalar = 0.0;
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) cp.scalar += cp.ginv(j, k) * cp.ricci(j, k);

  cp.schouten = Mat(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      cp.schouten(i, j) =
          (cp.ricci(i, j) - cp.scalar / (2.0 * (d - 1)) * cp.g(i, j)) / (d - 2);

  cp.weyl.assign(static_cast<std::size_t>(d * d * d * d), 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          double kn = cp.schouten(i, k) * cp.g(j, l) - cp.schouten(i, l) * cp.g(j, k) +
                      cp.g(i, k) * cp.schouten(j, l) - cp.g(i, l) * cp.schouten(j, k);
          cp.weyl[static_cast<std::size_t>(((i * d + j) * d + k) * d + l)] =
              rstd_ref(i, j, k, l) - kn;
        }
  return cp;
}

double metric_pairing(const Mat& g, const std::vector<double>& u,
                      const std::vector<double>& v) {
  double s = 0.0;
  for (int i = 0; i < g.rows(); ++i)
    for (int j = 0; j < g.cols(); ++j)
      s += g(i, j) * u[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
  return s;
}

namespace {

void geodesic_rhs(const Metric& m, const std::vector<double>& st,
                  std::vector<double>& out, int d) {
  std::vector<double> x(st.begin(), st.begin() + d);
  std::vector<double> gam = christoffel(m, x);
  out.assign(st.size(), 0.0);
  for (int i = 0; i < d; ++i) out[static_cast<std::size_t>(i)] = st[static_cast<std::size_t>(d + i)];
  for (int k = 0; k < d; ++k) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        acc -= gam[static_cast<std::size_t>((k * d + i) * d + j)] *
               st[static_cast<std::size_t>(d + i)] * st[static_cast<std::size_t>(d + j)];
    out[static_cast<std::size_t>(d + k)] = acc;
  }
}

}  // namespace

OracleTrajectory null_geodesic(const Metric& m, const std::vector<double>& x0,
                               const std::vector<double>& v0, double s1,
                               double tol, int nsamples) {
  int d = m.dim;
  Mat g0 = m.eval(x0);
  double nn = metric_pairing(g0, v0, v0);
  double vscale = 0.0;
  for (double v : v0) vscale = std::max(vscale, std::abs(v));
  if (std::abs(nn) > 1e-10 * std::max(1.0, vscale * vscale * g0.max_abs()))
    throw Error(ErrorKind::BadInput, "initial velocity is not null");

  auto rhs = [&](double, const std::vector<double>& st, std::vector<double>& out) {
    geodesic_rhs(m, st, out, d);
  };
  std::vector<double> y0;
  y0.insert(y0.end(), x0.begin(), x0.end());
  y0.insert(y0.end(), v0.begin(), v0.end());
  std::vector<double> ts(static_cast<std::size_t>(nsamples));
  for (int i = 0; i < nsamples; ++i)
    ts[static_cast<std::size_t>(i)] = s1 * i / (nsamples - 1);
  OdeResult ode = integrate_ode(rhs, y0, 0.0, s1, tol, 1e-12, ts, s1 / 256.0);

  OracleTrajectory tr;
  tr.s = ts;
  tr.stats = ode.stats;
  for (const auto& st : ode.states) {
    std::vector<double> x(st.begin(), st.begin() + d);
    std::vector<double> v(st.begin() + d, st.begin() + 2 * d);
    tr.null_norm.push_back(metric_pairing(m.eval(x), v, v));
    tr.x.push_back(std::move(x));
    tr.v.push_back(std::move(v));
  }
  return tr;
}

namespace {

// Screen basis at the start point: complete xdot with an auxiliary null
// vector, project coordinate candidates, indefinite Gram-Schmidt.
Mat initial_screen_frame(const Mat& g, const std::vector<double>& v, int d) {
  // auxiliary vector with g(u, v) != 0
  int best = 0;
  double bestv = 0.0;
  std::vector<double> gv(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) gv[static_cast<std::size_t>(i)] += g(i, j) * v[static_cast<std::size_t>(j)];
  for (int i = 0; i < d; ++i)
    if (std::abs(gv[static_cast<std::size_t>(i)]) > bestv) {
      bestv = std::abs(gv[static_cast<std::size_t>(i)]);
      best = i;
    }
  if (bestv == 0.0) throw Error(ErrorKind::DegenerateMetric, "null vector degenerate");
  std::vector<double> w(static_cast<std::size_t>(d), 0.0);
  w[static_cast<std::size_t>(best)] = 1.0;
  double gww = metric_pairing(g, w, w);
  double gwv = metric_pairing(g, w, v);
  // null auxiliary N with g(N, v) = 1
  std::vector<double> nvec(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i)
    nvec[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] - gww / (2.0 * gwv) * v[static_cast<std::size_t>(i)];
  double gnv = metric_pairing(g, nvec, v);
  for (auto& c : nvec) c /= gnv;

  // project coordinate candidates onto the screen
  std::vector<std::vector<double>> cands;
  for (int i = 0; i < d; ++i) {
    std::vector<double> e(static_cast<std::size_t>(d), 0.0);
    e[static_cast<std::size_t>(i)] = 1.0;
    double a = metric_pairing(g, e, nvec);
    double b = metric_pairing(g, e, v);
    for (int j = 0; j < d; ++j)
      e[static_cast<std::size_t>(j)] -= a * v[static_cast<std::size_t>(j)] + b * nvec[static_cast<std::size_t>(j)];
    cands.push_back(std::move(e));
  }
  // indefinite Gram-Schmidt, greedy on |norm|
  std::vector<std::vector<double>> frame;
  std::vector<double> signs;
  for (int step = 0; step < d - 2; ++step) {
    int pick = -1;
    double best_norm = 0.0;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      double nn = metric_pairing(g, cands[c], cands[c]);
      if (std::abs(nn) > best_norm) {
        best_norm = std::abs(nn);
        pick = static_cast<int>(c);
      }
    }
    if (pick < 0 || best_norm < 1e-12)
      throw Error(ErrorKind::DegenerateMetric, "screen construction failed");
    std::vector<double> e = cands[static_cast<std::size_t>(pick)];
    double nn = metric_pairing(g, e, e);
    double sg = nn > 0 ? 1.0 : -1.0;
    double sc = 1.0 / std::sqrt(std::abs(nn));
    for (auto& c : e) c *= sc;
    cands.erase(cands.begin() + pick);
    for (auto& c : cands) {
      double pr = sg * metric_pairing(g, c, e);
      for (int i = 0; i < d; ++i) c[static_cast<std::size_t>(i)] -= pr * e[static_cast<std::size_t>(i)];
    }
    frame.push_back(std::move(e));
    signs.push_back(sg);
  }
  // order +1 columns first
  Mat f(d, d - 2);
  int col = 0;
  for (std::size_t k = 0; k < frame.size(); ++k)
    if (signs[k] > 0) {
      for (int i = 0; i < d; ++i) f(i, col) = frame[k][static_cast<std::size_t>(i)];
      ++col;
    }
  for (std::size_t k = 0; k < frame.size(); ++k)
    if (signs[k] < 0) {
      for (int i = 0; i < d; ++i) f(i, col) = frame[k][static_cast<std::size_t>(i)];
      ++col;
    }
  return f;
}

}  // namespace

DeviationSeries geodesic_deviation(const Metric& m, const std::vector<double>& x0,
                                   const std::vector<double>& v0, double s1,
                                   double tol, int nsamples) {
  int d = m.dim;
  int mdim = d - 2;
  Mat g0 = m.eval(x0);
  Mat frame0 = initial_screen_frame(g0, v0, d);

  // state: x, v, E_1..E_m
  auto rhs = [&](double, const std::vector<double>& st, std::vector<double>& out) {
    std::vector<double> x(st.begin(), st.begin() + d);
    std::vector<double> gam = christoffel(m, x);
    out.assign(st.size(), 0.0);
    for (int i = 0; i < d; ++i) out[static_cast<std::size_t>(i)] = st[static_cast<std::size_t>(d + i)];
    auto gamv = [&](int k, int i, int j) {
      return gam[static_cast<std::size_t>((k * d + i) * d + j)];
    };
    for (int k = 0; k < d; ++k) {
      double acc = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          acc -= gamv(k, i, j) * st[static_cast<std::size_t>(d + i)] * st[static_cast<std::size_t>(d + j)];
      out[static_cast<std::size_t>(d + k)] = acc;
    }
    for (int e = 0; e < mdim; ++e) {
      std::size_t off = static_cast<std::size_t>(2 * d + e * d);
      for (int k = 0; k < d; ++k) {
        double acc = 0.0;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j)
            acc -= gamv(k, i, j) * st[static_cast<std::size_t>(d + i)] * st[off + static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(2 * d + e * d + k)] = acc;
      }
    }
  };

  std::vector<double> y0;
  y0.insert(y0.end(), x0.begin(), x0.end());
  y0.insert(y0.end(), v0.begin(), v0.end());
  for (int e = 0; e < mdim; ++e)
    for (int i = 0; i < d; ++i) y0.push_back(frame0(i, e));

  std::vector<double> ts(static_cast<std::size_t>(nsamples));
  for (int i = 0; i < nsamples; ++i)
    ts[static_cast<std::size_t>(i)] = s1 * i / (nsamples - 1);
  OdeResult ode = integrate_ode(rhs, y0, 0.0, s1, tol, 1e-12, ts, s1 / 256.0);

  DeviationSeries dev;
  dev.s = ts;
  dev.stats = ode.stats;
  dev.screen_gram0 = frame0.transpose() * g0 * frame0;
  for (const auto& st : ode.states) {
    std::vector<double> x(st.begin(), st.begin() + d);
    std::vector<double> v(st.begin() + d, st.begin() + 2 * d);
    Mat frame(d, mdim);
    for (int e = 0; e < mdim; ++e)
      for (int i = 0; i < d; ++i)
        frame(i, e) = st[static_cast<std::size_t>(2 * d + e * d + i)];
    CurvatureAtPoint cp = curvature(m, x);
    Mat gs = frame.transpose() * cp.g * frame;
    Mat gs_inv = inverse(gs);
    // tidal bilinear: M_cb = g(E_c, R(E_b, v)v)
    Mat mbil(mdim, mdim);
    for (int b = 0; b < mdim; ++b) {
      std::vector<double> rv(static_cast<std::size_t>(d), 0.0);
      // (R(X,Y)Z)^a = R^a_{kij} Z^k X^i Y^j with X = E_b, Y = v, Z = v
      for (int a = 0; a < d; ++a) {
        double acc = 0.0;
        for (int k = 0; k < d; ++k)
          for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
              acc += cp.rup_at(a, k, i, j) * v[static_cast<std::size_t>(k)] * frame(i, b) *
                     v[static_cast<std::size_t>(j)];
        rv[static_cast<std::size_t>(a)] = acc;
      }
      for (int c = 0; c < mdim; ++c) {
        double acc = 0.0;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j)
            acc += cp.g(i, j) * frame(i, c) * rv[static_cast<std::size_t>(j)];
        mbil(c, b) = acc;
      }
    }
    Mat top = gs_inv * mbil;
    Mat tf = top;
    double tr = top.trace();
    for (int i = 0; i < mdim; ++i) tf(i, i) -= tr / mdim;
    dev.x.push_back(std::move(x));
    dev.v.push_back(std::move(v));
    dev.frames.push_back(std::move(frame));
    dev.tidal.push_back(std::move(top));
    dev.tidal_tracefree.push_back(std::move(tf));
    dev.trace.push_back(tr);
  }
  return dev;
}

CoordinateJacobiRun null_geodesic_jacobi_by_coordinate(
    const Metric& m, const std::vector<double>& x0, const std::vector<double>& v0,
    int coord, const std::vector<double>& tgrid,
    const std::vector<std::vector<double>>& jdot0, double tol) {
  int d = m.dim;
  int nf = static_cast<int>(jdot0.size());
  Mat g0 = m.eval(x0);
  double nn = metric_pairing(g0, v0, v0);
  double vscale = 0.0;
  for (double v : v0) vscale = std::max(vscale, std::abs(v));
  if (std::abs(nn) > 1e-10 * std::max(1.0, vscale * vscale * g0.max_abs()))
    throw Error(ErrorKind::BadInput, "initial velocity is not null");

  // state: x, v, (J_k, P_k) with P = D_s J the covariant derivative;
  // independent variable is x^coord
  auto rhs = [&](double, const std::vector<double>& st, std::vector<double>& out) {
    std::vector<double> x(st.begin(), st.begin() + d);
    std::vector<double> v(st.begin() + d, st.begin() + 2 * d);
    double vc = v[static_cast<std::size_t>(coord)];
    if (!(std::abs(vc) > 1e-12))
      throw Error(ErrorKind::ChartExit, "geodesic no longer graphed over the coordinate");
    CurvatureAtPoint cp = curvature(m, x);
    out.assign(st.size(), 0.0);
    for (int i = 0; i < d; ++i) out[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)] / vc;
    auto gamv = [&](int k, int i, int j) { return cp.gamma_at(k, i, j); };
    for (int k = 0; k < d; ++k) {
      double acc = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          acc -= gamv(k, i, j) * v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(d + k)] = acc / vc;
    }
    for (int f = 0; f < nf; ++f) {
      std::size_t joff = static_cast<std::size_t>(2 * d + f * 2 * d);
      std::size_t koff = joff + static_cast<std::size_t>(d);
      // dJ^a/ds = P^a - Gamma^a(v, J)
      for (int a = 0; a < d; ++a) {
        double acc = st[koff + static_cast<std::size_t>(a)];
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j)
            acc -= gamv(a, i, j) * v[static_cast<std::size_t>(i)] * st[joff + static_cast<std::size_t>(j)];
        out[joff + static_cast<std::size_t>(a)] = acc / vc;
      }
      // dP^a/ds = -(R(J,v)v)^a - Gamma^a(v, P)
      for (int a = 0; a < d; ++a) {
        double acc = 0.0;
        for (int k = 0; k < d; ++k)
          for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
              acc -= cp.rup_at(a, k, i, j) * v[static_cast<std::size_t>(k)] *
                     st[joff + static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j)
            acc -= gamv(a, i, j) * v[static_cast<std::size_t>(i)] * st[koff + static_cast<std::size_t>(j)];
        out[koff + static_cast<std::size_t>(a)] = acc / vc;
      }
    }
  };

  std::vector<double> y0;
  y0.insert(y0.end(), x0.begin(), x0.end());
  y0.insert(y0.end(), v0.begin(), v0.end());
  for (int f = 0; f < nf; ++f) {
    for (int i = 0; i < d; ++i) y0.push_back(0.0);
    for (int i = 0; i < d; ++i) y0.push_back(jdot0[static_cast<std::size_t>(f)][static_cast<std::size_t>(i)]);
  }
  double t0 = tgrid.front(), t1 = tgrid.back();
  OdeResult ode = integrate_ode(rhs, y0, t0, t1, tol, 1e-12, tgrid, (t1 - t0) / 256.0);

  CoordinateJacobiRun run;
  run.t = tgrid;
  run.stats = ode.stats;
  for (const auto& st : ode.states) {
    std::vector<double> x(st.begin(), st.begin() + d);
    std::vector<double> v(st.begin() + d, st.begin() + 2 * d);
    double vc = v[static_cast<std::size_t>(coord)];
    std::vector<double> gam = christoffel(m, x);
    std::vector<double> vd(static_cast<std::size_t>(d), 0.0);
    for (int k = 0; k < d; ++k) {
      double acc = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          acc -= gam[static_cast<std::size_t>((k * d + i) * d + j)] * v[static_cast<std::size_t>(i)] *
                 v[static_cast<std::size_t>(j)];
      vd[static_cast<std::size_t>(k)] = acc / vc;
    }
    std::vector<std::vector<double>> J, Jd;
    for (int f = 0; f < nf; ++f) {
      std::size_t joff = static_cast<std::size_t>(2 * d + f * 2 * d);
      std::size_t koff = joff + static_cast<std::size_t>(d);
      std::vector<double> jf(st.begin() + static_cast<std::ptrdiff_t>(joff),
                             st.begin() + static_cast<std::ptrdiff_t>(joff + static_cast<std::size_t>(d)));
      // coordinate derivative dJ^a/dt = (P^a - Gamma^a(v, J)) / vc
      std::vector<double> kf(static_cast<std::size_t>(d), 0.0);
      for (int a = 0; a < d; ++a) {
        double acc = st[koff + static_cast<std::size_t>(a)];
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j)
            acc -= gam[static_cast<std::size_t>((a * d + i) * d + j)] *
                   v[static_cast<std::size_t>(i)] * jf[static_cast<std::size_t>(j)];
        kf[static_cast<std::size_t>(a)] = acc / vc;
      }
      J.push_back(std::move(jf));
      Jd.push_back(std::move(kf));
    }
    run.x.push_back(std::move(x));
    run.v.push_back(std::move(v));
    run.vdot.push_back(std::move(vd));
    run.J.push_back(std::move(J));
    run.Jdot.push_back(std::move(Jd));
  }
  return run;
}

namespace {

class MetricConeDefining : public DefiningFunction {
 public:
  MetricConeDefining(Metric m, int n) : metric_(std::move(m)), n_(n) {}

  Jet eval(const std::vector<Jet>& xy, const double* branch_seed) const override {
    int n = n_;
    const Jet& probe = xy[0];
    std::map<std::string, Jet> env;
    for (int i = 0; i <= n; ++i) env["x" + std::to_string(i)] = xy[static_cast<std::size_t>(i)];
    for (const auto& [k, v] : metric_.consts)
      env[k] = Jet::constant(v, probe.nvars(), probe.order());

    int d = n + 1;
    Jet zero = Jet::constant(0.0, probe.nvars(), probe.order());
    std::vector<std::vector<Jet>> g(static_cast<std::size_t>(d),
                                    std::vector<Jet>(static_cast<std::size_t>(d), zero));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (metric_.comp[static_cast<std::size_t>(i * d + j)])
          g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
              eval_jet(*metric_.comp[static_cast<std::size_t>(i * d + j)], env);
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        Jet v = (g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +
                 g[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) *
                0.5;
        g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = v;
        g[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = v;
      }

    // yhat = (., y1..y{n-1}, 1)
    std::vector<Jet> yh(static_cast<std::size_t>(d), zero);
    for (int a = 1; a <= n - 1; ++a) yh[static_cast<std::size_t>(a)] = xy[static_cast<std::size_t>(n + a)];
    yh[static_cast<std::size_t>(n)] = Jet::constant(1.0, probe.nvars(), probe.order());

    Jet a = g[0][0];
    Jet b = zero;
    Jet c = zero;
    for (int k = 1; k <= n; ++k)
      b = b + 2.0 * g[0][static_cast<std::size_t>(k)] * yh[static_cast<std::size_t>(k)];
    for (int k = 1; k <= n; ++k)
      for (int l = 1; l <= n; ++l)
        c = c + g[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] *
                    yh[static_cast<std::size_t>(k)] * yh[static_cast<std::size_t>(l)];

    double a0 = a.value(), b0 = b.value(), c0 = c.value();
    double scale = b0 * b0 + std::abs(4.0 * a0 * c0);
    if (std::abs(a0) <= 1e-14 * std::sqrt(std::max(scale, 1e-300))) {
      if (std::abs(b0) <= 1e-14)
        throw Error(ErrorKind::NoRealRoot, "cone equation degenerate in y0");
      return (-1.0) * c / b;
    }
    Jet disc = b * b - 4.0 * a * c;
    double disc0 = disc.value();
    if (disc0 < 0.0)
      throw Error(ErrorKind::NoRealRoot, "no real cone branch at this point");
    if (disc0 < 1e-12 * std::max(scale, 1e-300))
      throw Error(ErrorKind::BranchAmbiguity, "cone tangent to the chart slice");
    Jet sq = sqrt(disc);
    // stable split: q = -(b + sign(b0) sqrt(disc))/2, roots q/a and c/q
    double sgn = b0 >= 0.0 ? 1.0 : -1.0;
    Jet q = (b + sgn * sq) * -0.5;
    Jet r1 = q / a;
    Jet r2 = c / q;
    double v1 = r1.value(), v2 = r2.value();
    bool take1;
    if (branch_seed != nullptr) {
      take1 = std::abs(v1 - *branch_seed) <= std::abs(v2 - *branch_seed);
    } else {
      double tie = 1e-12 * (1.0 + std::min(std::abs(v1), std::abs(v2)));
      if (std::abs(std::abs(v1) - std::abs(v2)) <= tie)
        take1 = v1 >= v2;
      else
        take1 = std::abs(v1) < std::abs(v2);
    }
    return take1 ? r1 : r2;
  }

 private:
  Metric metric_;
  int n_;
};

}  // namespace

CausalStructure graph_from_metric(const Metric& m, std::string name) {
  CausalStructure s;
  s.n = m.dim - 1;
  s.signature = {m.signature.first - 1, m.signature.second - 1};
  s.defining = std::make_shared<MetricConeDefining>(m, s.n);
  s.name = name.empty() ? m.name + "_cone" : std::move(name);
  s.validate();
  return s;
}

}  // namespace causalgeo
