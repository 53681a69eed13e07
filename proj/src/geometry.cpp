#include "causalgeo/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "causalgeo/errors.hpp"

namespace causalgeo {

AstDefining::AstDefining(int n, AstPtr ast, std::map<std::string, double> consts)
    : n_(n), ast_(std::move(ast)), consts_(std::move(consts)) {
  std::set<std::string> allowed;
  for (int i = 0; i <= n_; ++i) allowed.insert("x" + std::to_string(i));
  for (int a = 1; a <= n_ - 1; ++a) allowed.insert("y" + std::to_string(a));
  for (const auto& [k, v] : consts_) allowed.insert(k);
  if (!uses_only(*ast_, allowed))
    throw Error(ErrorKind::BadInput,
                "defining function uses identifiers outside the declared chart");
}

Jet AstDefining::eval(const std::vector<Jet>& xy, const double*) const {
  std::map<std::string, Jet> env;
  const Jet& probe = xy.front();
  for (int i = 0; i <= n_; ++i) env["x" + std::to_string(i)] = xy[static_cast<std::size_t>(i)];
  for (int a = 1; a <= n_ - 1; ++a)
    env["y" + std::to_string(a)] = xy[static_cast<std::size_t>(n_ + a)];
  for (const auto& [k, v] : consts_)
    env[k] = Jet::constant(v, probe.nvars(), probe.order());
  return eval_jet(*ast_, env);
}

void CausalStructure::validate() const {
  if (n < 3) throw Error(ErrorKind::BadInput, "dim M = n+1 must be at least 4");
  if (signature.first < 0 || signature.second < 0 ||
      signature.first + signature.second != n - 1)
    throw Error(ErrorKind::BadInput, "signature does not match fiber dimension");
  if (!defining) throw Error(ErrorKind::BadInput, "missing defining function");
}

Jet CausalStructure::f_jet_y(const CPoint& p, int order, const double* branch_seed) const {
  int m = n - 1;
  std::vector<Jet> xy;
  xy.reserve(static_cast<std::size_t>(2 * n));
  for (int i = 0; i <= n; ++i)
    xy.push_back(Jet::constant(p.x[static_cast<std::size_t>(i)], m, order));
  for (int a = 0; a < m; ++a)
    xy.push_back(Jet::variable(a, p.y[static_cast<std::size_t>(a)], m, order));
  return defining->eval(xy, branch_seed);
}

Jet CausalStructure::f_jet_xy(const CPoint& p, int order, const double* branch_seed) const {
  int nv = 2 * n;
  std::vector<Jet> xy;
  xy.reserve(static_cast<std::size_t>(nv));
  for (int i = 0; i <= n; ++i)
    xy.push_back(Jet::variable(i, p.x[static_cast<std::size_t>(i)], nv, order));
  for (int a = 0; a < n - 1; ++a)
    xy.push_back(Jet::variable(n + 1 + a, p.y[static_cast<std::size_t>(a)], nv, order));
  return defining->eval(xy, branch_seed);
}

double CausalStructure::f_value(const CPoint& p, const double* branch_seed) const {
  return f_jet_y(p, 0, branch_seed).value();
}

CausalStructure make_structure(int n, std::pair<int, int> sig, AstPtr f,
                               std::map<std::string, double> consts,
                               std::string name) {
  CausalStructure s;
  s.n = n;
  s.signature = sig;
  s.defining = std::make_shared<AstDefining>(n, std::move(f), std::move(consts));
  s.name = std::move(name);
  s.validate();
  return s;
}

namespace {

// Hessian and third-derivative data from a fiber jet of order >= 2.
HessianData hessian_from_jet(const CausalStructure& s, const Jet& jy) {
  int m = s.fiber_dim();
  HessianData hd;
  hd.H = Mat(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) {
      MultiIndex mi = MultiIndex::unit(m, a).plus(MultiIndex::unit(m, b));
      double v = jy.partial(mi);
      hd.H(a, b) = v;
      hd.H(b, a) = v;
    }
  double hnorm = hd.H.frobenius();
  double thr = 1e-10 * std::max(hnorm, 1e-300);
  SymEigen eig = sym_eigen(hd.H);
  int pos = 0, neg = 0;
  for (double v : eig.values) {
    if (std::abs(v) < thr)
      throw Error(ErrorKind::TangentiallyDegenerate,
                  "vertical Hessian has a near-zero eigenvalue");
    (v > 0 ? pos : neg)++;
  }
  hd.inertia = {pos, neg};
  if (hd.inertia != s.signature)
    throw Error(ErrorKind::SignatureMismatch,
                "vertical Hessian inertia (" + std::to_string(pos) + "," +
                    std::to_string(neg) + ") does not match declared (" +
                    std::to_string(s.signature.first) + "," +
                    std::to_string(s.signature.second) + ")");
  hd.det = det(hd.H);
  hd.Hinv = inverse(hd.H);
  hd.d3_norm = 0.0;
  if (jy.order() >= 3) {
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int c = 0; c < m; ++c) {
          MultiIndex mi = MultiIndex::unit(m, a)
                              .plus(MultiIndex::unit(m, b))
                              .plus(MultiIndex::unit(m, c));
          double v = jy.partial(mi);
          hd.d3_norm += v * v;
        }
    hd.d3_norm = std::sqrt(hd.d3_norm);
  }
  return hd;
}

}  // namespace

HessianData vertical_hessian(const CausalStructure& s, const CPoint& p,
                             const double* branch_seed) {
  Jet jy = s.f_jet_y(p, 2, branch_seed);
  return hessian_from_jet(s, jy);
}

AdaptedCoframe adapted_coframe(const CausalStructure& s, const CPoint& p,
                               const Mat* seedT, const double* branch_seed) {
  int n = s.n;
  int m = n - 1;
  Jet jxy = s.f_jet_xy(p, 2, branch_seed);
  Jet jy = s.f_jet_y(p, 2, branch_seed);
  HessianData hd = hessian_from_jet(s, jy);

  AdaptedCoframe cf;
  cf.point = p;
  cf.H = hd.H;
  cf.Hinv = hd.Hinv;
  cf.F = jxy.value();
  cf.gradF.resize(static_cast<std::size_t>(m));

  int nv = 2 * n;
  auto dx = [&](int i) { return MultiIndex::unit(nv, i); };
  auto dy = [&](int a) { return MultiIndex::unit(nv, n + 1 + a); };

  for (int a = 0; a < m; ++a)
    cf.gradF[static_cast<std::size_t>(a)] = jxy.partial(dy(a));

  Mat w(2 * n, 2 * n);
  // omega0 = dx0 - F_a dx^a + (y^a F_a - F) dx^n
  w(0, 0) = 1.0;
  double yF = 0.0;
  for (int a = 0; a < m; ++a) {
    w(0, 1 + a) = -cf.gradF[static_cast<std::size_t>(a)];
    yF += p.y[static_cast<std::size_t>(a)] * cf.gradF[static_cast<std::size_t>(a)];
  }
  w(0, n) = yF - cf.F;
  // omega^a = dx^a - y^a dx^n
  for (int a = 0; a < m; ++a) {
    w(1 + a, 1 + a) = 1.0;
    w(1 + a, n) = -p.y[static_cast<std::size_t>(a)];
  }
  // omega^n = dx^n
  w(n, n) = 1.0;
  // theta_a = F_ab dy^b + F_0a dx0 + F_ba dx^b + (F_an - F_a - F_0 F_a) dx^n
  double F0 = jxy.partial(dx(0));
  for (int a = 0; a < m; ++a) {
    int row = n + 1 + a;
    for (int b = 0; b < m; ++b)
      w(row, n + 1 + b) = hd.H(a, b);
    w(row, 0) = jxy.partial(dx(0).plus(dy(a)));
    for (int b = 0; b < m; ++b)
      w(row, 1 + b) = jxy.partial(dx(1 + b).plus(dy(a)));
    double Fan = jxy.partial(dx(n).plus(dy(a)));
    double Fa = jxy.partial(dx(1 + a));
    w(row, n) = Fan - Fa - F0 * cf.gradF[static_cast<std::size_t>(a)];
  }

  cf.T = normalize_sff(hd.H, s.signature, seedT);
  cf.Tinv = inverse(cf.T);

  // replace theta rows by T^t theta
  Mat theta(m, 2 * n);
  for (int a = 0; a < m; ++a)
    for (int j = 0; j < 2 * n; ++j) theta(a, j) = w(n + 1 + a, j);
  for (int a = 0; a < m; ++a)
    for (int j = 0; j < 2 * n; ++j) {
      double v = 0.0;
      for (int b = 0; b < m; ++b) v += cf.T(b, a) * theta(b, j);
      w(n + 1 + a, j) = v;
    }
  cf.W = w;
  return cf;
}

FubiniCubic fubini_cubic(const CausalStructure& s, const CPoint& p,
                         const double* branch_seed) {
  int n = s.n;
  int m = n - 1;
  Jet jy = s.f_jet_y(p, 3, branch_seed);
  HessianData hd = hessian_from_jet(s, jy);

  // third fiber derivatives
  std::vector<double> d3(static_cast<std::size_t>(m * m * m));
  auto at3 = [&](int a, int b, int c) -> double& {
    return d3[static_cast<std::size_t>((a * m + b) * m + c)];
  };
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c) {
        MultiIndex mi = MultiIndex::unit(m, a)
                            .plus(MultiIndex::unit(m, b))
                            .plus(MultiIndex::unit(m, c));
        at3(a, b, c) = jy.partial(mi);
      }

  // F_a = H^{bc} d3_abc, then remove the trace and scale by |det H|^{1/(n+1)}
  std::vector<double> fa(static_cast<std::size_t>(m), 0.0);
  for (int a = 0; a < m; ++a) {
    double v = 0.0;
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c) v += hd.Hinv(b, c) * at3(a, b, c);
    fa[static_cast<std::size_t>(a)] = v;
  }
  double a2 = std::pow(std::abs(hd.det), 1.0 / (n + 1));

  FubiniCubic out;
  out.m = m;
  out.F3_coord.resize(static_cast<std::size_t>(m * m * m));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c) {
        double v = at3(a, b, c) -
                   (hd.H(a, b) * fa[static_cast<std::size_t>(c)] +
                    hd.H(b, c) * fa[static_cast<std::size_t>(a)] +
                    hd.H(c, a) * fa[static_cast<std::size_t>(b)]) /
                       (n + 1);
        out.F3_coord[static_cast<std::size_t>((a * m + b) * m + c)] = v / a2;
      }

  out.T = normalize_sff(hd.H, s.signature, nullptr);

  // push into the eps frame: F'_abc = T^d_a T^e_b T^f_c F_def
  out.F3.assign(static_cast<std::size_t>(m * m * m), 0.0);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c) {
        double v = 0.0;
        for (int d = 0; d < m; ++d)
          for (int e = 0; e < m; ++e)
            for (int f = 0; f < m; ++f)
              v += out.T(d, a) * out.T(e, b) * out.T(f, c) *
                   out.F3_coord[static_cast<std::size_t>((d * m + e) * m + f)];
        out.F3[static_cast<std::size_t>((a * m + b) * m + c)] = v;
      }

  auto sgn = [&](int a) { return a < s.signature.first ? 1.0 : -1.0; };
  out.pick = 0.0;
  double nrm2 = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c) {
        double v = out.F3[static_cast<std::size_t>((a * m + b) * m + c)];
        out.pick += sgn(a) * sgn(b) * sgn(c) * v * v;
        nrm2 += v * v;
      }
  out.norm = std::sqrt(nrm2);

  out.apolarity.assign(static_cast<std::size_t>(m), 0.0);
  for (int a = 0; a < m; ++a) {
    double v = 0.0;
    for (int b = 0; b < m; ++b)
      v += sgn(b) * out.F3[static_cast<std::size_t>((a * m + b) * m + b)];
    out.apolarity[static_cast<std::size_t>(a)] = v;
    out.apolarity_resid = std::max(out.apolarity_resid, std::abs(v));
  }

  out.zero_scale = 1e-8 * (1.0 + hd.H.frobenius() + hd.d3_norm);
  return out;
}

std::pair<double, double> split_components(const FubiniCubic& f,
                                           std::pair<int, int> sig) {
  if (f.m != 2 || sig != std::pair<int, int>{1, 1})
    throw Error(ErrorKind::BadInput,
                "split components need a 4D structure of split signature");
  double f111 = f.F3[0];                  // (0,0,0)
  double f222 = f.F3[7];                  // (1,1,1)
  double up = f111;                       // F^1_11 = +F_111
  double dn = -f222;                      // F^2_22 = -F_222
  const double s = 1.0 / std::sqrt(2.0);
  return {s * (up + dn), s * (up - dn)};
}

Mat quadratic_form_g(const AdaptedCoframe& cf) {
  int twon = cf.W.rows();
  int n = twon / 2;
  int m = n - 1;
  int p = 0;
  // signature of the theta normalization fixes eps; recover p from T^t H T
  Mat e = cf.T.transpose() * cf.H * cf.T;
  for (int a = 0; a < m; ++a)
    if (e(a, a) > 0) ++p;
  Mat g(twon, twon);
  for (int i = 0; i < twon; ++i)
    for (int j = 0; j < twon; ++j) {
      double v = cf.W(0, i) * cf.W(n, j) + cf.W(n, i) * cf.W(0, j);
      for (int a = 0; a < m; ++a) {
        double sa = a < p ? 1.0 : -1.0;
        v -= sa * cf.W(1 + a, i) * cf.W(1 + a, j);
      }
      g(i, j) = v;
    }
  return g;
}

namespace {

// Jets of the homogenized Lagrangian L = 2 u^n (u^0 - F(x; u^a/u^n)) in the
// fiber variables u^0..u^n at the cone representative (F, y, 1).
Jet lagrangian_jet(const CausalStructure& s, const CPoint& p, int order) {
  int n = s.n;
  int d = n + 1;
  double f0 = s.f_value(p);
  std::vector<Jet> u;
  u.push_back(Jet::variable(0, f0, d, order));
  for (int a = 0; a < n - 1; ++a)
    u.push_back(Jet::variable(1 + a, p.y[static_cast<std::size_t>(a)], d, order));
  u.push_back(Jet::variable(n, 1.0, d, order));

  std::vector<Jet> xy;
  for (int i = 0; i <= n; ++i)
    xy.push_back(Jet::constant(p.x[static_cast<std::size_t>(i)], d, order));
  for (int a = 0; a < n - 1; ++a)
    xy.push_back(u[static_cast<std::size_t>(1 + a)] / u[static_cast<std::size_t>(n)]);
  Jet f = s.defining->eval(xy, nullptr);
  // degree-2 homogenization: 2 u^n (u^0 - u^n F(x; u^a/u^n))
  return 2.0 * u[static_cast<std::size_t>(n)] *
         (u[0] - u[static_cast<std::size_t>(n)] * f);
}

}  // namespace

std::vector<double> legendre(const CausalStructure& s, const CPoint& p) {
  int d = s.n + 1;
  Jet L = lagrangian_jet(s, p, 1);
  std::vector<double> cov(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i)
    cov[static_cast<std::size_t>(i)] = L.partial(MultiIndex::unit(d, i));
  return cov;
}

double legendre_graph_check(const CausalStructure& s, const CPoint& p) {
  std::vector<double> cov = legendre(s, p);
  double v = cov[0] * s.f_value(p);
  for (int a = 0; a < s.n - 1; ++a)
    v += cov[static_cast<std::size_t>(1 + a)] * p.y[static_cast<std::size_t>(a)];
  v += cov[static_cast<std::size_t>(s.n)];
  return v;
}

InvariantReport invariant_report(const CausalStructure& s, const CPoint& p) {
  InvariantReport r;
  r.point = p;
  FubiniCubic f = fubini_cubic(s, p);
  Jet jy = s.f_jet_y(p, 2);
  HessianData hd = hessian_from_jet(s, jy);
  r.inertia = hd.inertia;
  r.fubini_norm = f.norm;
  r.pick = f.pick;
  r.apolarity_resid = f.apolarity_resid;
  r.zero_scale = f.zero_scale;
  r.fubini_zero = f.norm < f.zero_scale;
  if (s.n == 3 && s.signature == std::pair<int, int>{1, 1}) {
    auto [fp, fm] = split_components(f, s.signature);
    r.has_split = true;
    r.fplus = fp;
    r.fminus = fm;
    r.ruled_plus = std::abs(fp) < f.zero_scale;
    r.ruled_minus = std::abs(fm) < f.zero_scale;
  }
  return r;
}

}  // namespace causalgeo
