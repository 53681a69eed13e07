#include "helpers.hpp"

#include <algorithm>

#include "causalgeo/errors.hpp"

namespace causalgeo::testing {

double jet_partial(const Ast& ast, const std::vector<std::string>& vars,
                   const std::vector<double>& at, const MultiIndex& alpha) {
  int nv = static_cast<int>(vars.size());
  int order = alpha.degree();
  std::map<std::string, Jet> env;
  for (int i = 0; i < nv; ++i)
    env[vars[static_cast<std::size_t>(i)]] =
        Jet::variable(i, at[static_cast<std::size_t>(i)], nv, order);
  return eval_jet(ast, env).partial(alpha);
}

double fd_partial_oracle(const Ast& ast, const std::vector<std::string>& vars,
                         const std::vector<double>& at, const MultiIndex& alpha) {
  int nv = static_cast<int>(vars.size());
  if (alpha.degree() == 0) {
    std::map<std::string, double> env;
    for (int i = 0; i < nv; ++i)
      env[vars[static_cast<std::size_t>(i)]] = at[static_cast<std::size_t>(i)];
    return eval_real(ast, env);
  }
  // peel one derivative off and difference the (exact) lower-order partial
  int var = -1;
  for (int i = 0; i < nv && var < 0; ++i)
    if (alpha[i] > 0) var = i;
  std::vector<int> rest(static_cast<std::size_t>(nv), 0);
  for (int i = 0; i < nv; ++i) rest[static_cast<std::size_t>(i)] = alpha[i];
  rest[static_cast<std::size_t>(var)] -= 1;
  MultiIndex lower{rest};

  double h = std::max(1.0, std::abs(at[static_cast<std::size_t>(var)])) *
             std::cbrt(2.220446049250313e-16);
  auto lower_partial = [&](const std::vector<double>& x) {
    if (lower.degree() == 0) {
      std::map<std::string, double> env;
      for (int i = 0; i < nv; ++i)
        env[vars[static_cast<std::size_t>(i)]] = x[static_cast<std::size_t>(i)];
      return eval_real(ast, env);
    }
    return jet_partial(ast, vars, x, lower);
  };
  return central_diff(lower_partial, at, var, h);
}

AstPtr random_expression(Rng& rng, const std::vector<std::string>& vars, int depth) {
  auto pick_var = [&]() {
    return Ast::var(vars[static_cast<std::size_t>(rng.next() % vars.size())]);
  };
  if (depth <= 0) {
    if (rng.uniform() < 0.4) return Ast::constant(std::round(rng.uniform(-2, 2) * 8) / 8.0);
    return pick_var();
  }
  double r = rng.uniform();
  if (r < 0.18)
    return Ast::binary(Ast::Kind::Add, random_expression(rng, vars, depth - 1),
                       random_expression(rng, vars, depth - 1));
  if (r < 0.36)
    return Ast::binary(Ast::Kind::Sub, random_expression(rng, vars, depth - 1),
                       random_expression(rng, vars, depth - 1));
  if (r < 0.58)
    return Ast::binary(Ast::Kind::Mul, random_expression(rng, vars, depth - 1),
                       random_expression(rng, vars, depth - 1));
  if (r < 0.66) {
    // keep denominators away from zero
    auto den = Ast::binary(
        Ast::Kind::Add, Ast::constant(2.0 + rng.uniform()),
        Ast::binary(Ast::Kind::Mul, Ast::constant(0.25),
                    random_expression(rng, vars, depth - 2)));
    return Ast::binary(Ast::Kind::Div, random_expression(rng, vars, depth - 1), den);
  }
  if (r < 0.74) {
    auto inner = Ast::binary(Ast::Kind::Mul, Ast::constant(0.5),
                             random_expression(rng, vars, depth - 1));
    return Ast::call("sin", {inner}, 0);
  }
  if (r < 0.82) {
    auto inner = Ast::binary(Ast::Kind::Mul, Ast::constant(0.5),
                             random_expression(rng, vars, depth - 1));
    return Ast::call("cos", {inner}, 0);
  }
  if (r < 0.9) {
    auto inner = Ast::binary(Ast::Kind::Mul, Ast::constant(0.25),
                             random_expression(rng, vars, depth - 1));
    return Ast::call("exp", {inner}, 0);
  }
  // log/sqrt of something safely positive
  auto inner = Ast::binary(
      Ast::Kind::Add, Ast::constant(3.0 + rng.uniform()),
      Ast::binary(Ast::Kind::Mul, Ast::constant(0.25),
                  random_expression(rng, vars, depth - 2)));
  if (r < 0.95) return Ast::call("log", {inner}, 0);
  return Ast::call("sqrt", {inner}, 0);
}

CrossValidation cross_validate(const CausalStructure& s, const Metric& m,
                               const CPoint& p0, double t1, double tol,
                               int nsamples, double compare_from) {
  int n = s.n;
  int mm = n - 1;
  CrossValidation cv;

  Trajectory traj = integrate_characteristic(s, p0, 0.0, t1, tol, nsamples);
  JacobiData jd = propagate_jacobi(s, traj, tol);
  cv.flow_optics = optical_scalars(s, traj, jd);

  // launch the oracle from the same cone point with u^n = 1
  std::vector<double> v0(static_cast<std::size_t>(n + 1));
  v0[0] = s.f_value(p0);
  for (int a = 0; a < mm; ++a) v0[static_cast<std::size_t>(1 + a)] = p0.y[static_cast<std::size_t>(a)];
  v0[static_cast<std::size_t>(n)] = 1.0;

  // matched Jacobi seeds: dJ/dt(t0) = e_hat_a T0^a_b in M
  const Mat& T0 = traj.samples[0].cf.T;
  std::vector<std::vector<double>> jdot0;
  for (int b = 0; b < mm; ++b) {
    std::vector<double> w(static_cast<std::size_t>(n + 1), 0.0);
    for (int a = 0; a < mm; ++a) {
      w[static_cast<std::size_t>(1 + a)] += T0(a, b);
      w[0] += traj.samples[0].cf.gradF[static_cast<std::size_t>(a)] * T0(a, b);
    }
    jdot0.push_back(std::move(w));
  }

  std::vector<double> tgrid;
  for (const auto& smp : traj.samples) tgrid.push_back(smp.state.t);
  CoordinateJacobiRun run =
      null_geodesic_jacobi_by_coordinate(m, p0.x, v0, n, tgrid, jdot0, tol);

  // base curves as point sets over the shared x^n grid
  for (std::size_t i = 0; i < tgrid.size(); ++i)
    for (int k = 0; k <= n; ++k)
      cv.max_curve_mismatch = std::max(
          cv.max_curve_mismatch,
          std::abs(run.x[i][static_cast<std::size_t>(k)] -
                   traj.samples[i].state.x[static_cast<std::size_t>(k)]));

  // shadow components of the oracle Jacobi fields through the causal coframes
  std::vector<Mat> V(tgrid.size(), Mat(mm, mm)), Vd(tgrid.size(), Mat(mm, mm));
  for (std::size_t i = 0; i < tgrid.size(); ++i) {
    double vn = run.v[i][static_cast<std::size_t>(n)];
    for (int b = 0; b < mm; ++b) {
      for (int a = 0; a < mm; ++a) {
        double ya = run.v[i][static_cast<std::size_t>(1 + a)] / vn;
        double ydot = (run.vdot[i][static_cast<std::size_t>(1 + a)] * vn -
                       run.v[i][static_cast<std::size_t>(1 + a)] *
                           run.vdot[i][static_cast<std::size_t>(n)]) /
                      (vn * vn);
        double Jn = run.J[i][static_cast<std::size_t>(b)][static_cast<std::size_t>(n)];
        double Jdn = run.Jdot[i][static_cast<std::size_t>(b)][static_cast<std::size_t>(n)];
        double Ja = run.J[i][static_cast<std::size_t>(b)][static_cast<std::size_t>(1 + a)];
        double Jda = run.Jdot[i][static_cast<std::size_t>(b)][static_cast<std::size_t>(1 + a)];
        V[i](a, b) = Ja - ya * Jn;
        Vd[i](a, b) = Jda - ydot * Jn - ya * Jdn;
      }
    }
  }
  JacobiData ojd = jacobi_from_shadow(traj, V, Vd);
  ojd.m = mm;
  cv.oracle_optics = optical_scalars(s, traj, ojd);

  for (std::size_t i = 0; i < tgrid.size(); ++i) {
    const OpticalSample& a = cv.flow_optics[i];
    const OpticalSample& b = cv.oracle_optics[i];
    if (!a.valid || !b.valid) continue;
    if (a.t - traj.t0 < compare_from) continue;
    double scale1 = std::max(1.0, b.wsf.frobenius());
    cv.max_wsf_diff = std::max(cv.max_wsf_diff, (a.wsf - b.wsf).max_abs() / scale1);
    // eigenvalues through the elementary symmetric functions; stable for
    // the defective (nilpotent wave) case
    double tra = a.wsf.trace(), trb = b.wsf.trace();
    double deta = det(a.wsf), detb = det(b.wsf);
    double e1 = std::abs(tra - trb) / scale1;
    double e2 = std::abs(deta - detb) / (scale1 * scale1);
    cv.max_eig_diff = std::max(cv.max_eig_diff, std::max(e1, e2));
  }
  return cv;
}

namespace {

AstPtr subst_vars(const Ast& a, const std::map<std::string, AstPtr>& repl) {
  switch (a.kind) {
    case Ast::Kind::Constant:
      return Ast::constant(a.number);
    case Ast::Kind::Var: {
      auto it = repl.find(a.name);
      return it == repl.end() ? Ast::var(a.name) : it->second;
    }
    case Ast::Kind::Neg:
      return Ast::unary(Ast::Kind::Neg, subst_vars(*a.args[0], repl));
    case Ast::Kind::Call: {
      std::vector<AstPtr> args;
      for (const auto& arg : a.args) args.push_back(subst_vars(*arg, repl));
      auto node = std::make_shared<Ast>();
      node->kind = Ast::Kind::Call;
      node->name = a.name;
      node->args = std::move(args);
      return node;
    }
    default:
      return Ast::binary(a.kind, subst_vars(*a.args[0], repl),
                         subst_vars(*a.args[1], repl));
  }
}

}  // namespace

double angle_between(const std::vector<double>& a, const std::vector<double>& b) {
  double na = 0.0, dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i] * a[i];
    dot += a[i] * b[i];
  }
  na = std::sqrt(na);
  double proj = dot / na;
  double perp2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double r = b[i] - proj * a[i] / na;
    perp2 += r * r;
  }
  return std::atan2(std::sqrt(perp2), std::abs(proj));
}

CausalStructure affine_fiber_change(const CausalStructure& s, const Mat& A,
                                    const std::vector<double>& b) {
  const auto* ad = dynamic_cast<const AstDefining*>(s.defining.get());
  if (!ad) throw Error(ErrorKind::BadInput, "expression-backed structure required");
  int m = s.fiber_dim();
  std::map<std::string, AstPtr> repl;
  for (int a = 0; a < m; ++a) {
    AstPtr acc = Ast::constant(b[static_cast<std::size_t>(a)]);
    for (int c = 0; c < m; ++c) {
      AstPtr term = Ast::binary(Ast::Kind::Mul, Ast::constant(A(a, c)),
                                Ast::var("y" + std::to_string(c + 1)));
      acc = Ast::binary(Ast::Kind::Add, acc, term);
    }
    repl["y" + std::to_string(a + 1)] = acc;
  }
  AstPtr nf = subst_vars(ad->ast(), repl);
  return make_structure(s.n, s.signature, nf, {}, s.name + "_affine");
}

}  // namespace causalgeo::testing
