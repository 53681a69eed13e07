#include "causalgeo/catalog.hpp"

#include <cmath>
#include <cstdio>

#include "causalgeo/errors.hpp"

namespace causalgeo {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

CausalStructure flat_quadric(int p, int q) {
  int m = p + q;
  if (m < 2) throw Error(ErrorKind::BadInput, "flat quadric needs p+q >= 2");
  std::string expr;
  for (int a = 0; a < m; ++a) {
    if (a) expr += a < p ? " + " : " - ";
    else if (p == 0) expr += "-";
    expr += "y" + std::to_string(a + 1) + "^2";
  }
  return make_structure(m + 1, {p, q}, parse(expr), {},
                        "flat_quadric_" + std::to_string(p + 1) + std::to_string(q + 1));
}

CausalStructure cayley_scroll() {
  return make_structure(3, {1, 1}, parse("y1*y2 + (1/3)*y1^3"), {}, "cayley");
}

CausalStructure cubic_family(AstPtr c111, AstPtr c12, AstPtr c1, AstPtr c2,
                             AstPtr c0, std::string name) {
  // assemble (1/3) c111 y1^3 + c12 y1 y2 + c1 y1 + c2 y2 + c0
  auto y1 = Ast::var("y1");
  auto y2 = Ast::var("y2");
  auto third = Ast::binary(Ast::Kind::Div, Ast::constant(1.0), Ast::constant(3.0));
  auto cube = Ast::binary(Ast::Kind::Pow, y1, Ast::constant(3.0));
  auto t1 = Ast::binary(Ast::Kind::Mul, Ast::binary(Ast::Kind::Mul, third, c111), cube);
  auto t2 = Ast::binary(Ast::Kind::Mul, c12, Ast::binary(Ast::Kind::Mul, y1, y2));
  auto t3 = Ast::binary(Ast::Kind::Mul, c1, y1);
  auto t4 = Ast::binary(Ast::Kind::Mul, c2, y2);
  auto sum = Ast::binary(Ast::Kind::Add, t1, t2);
  sum = Ast::binary(Ast::Kind::Add, sum, t3);
  sum = Ast::binary(Ast::Kind::Add, sum, t4);
  sum = Ast::binary(Ast::Kind::Add, sum, c0);
  return make_structure(3, {1, 1}, sum, {}, std::move(name));
}

CausalStructure pp_wave() {
  return cubic_family(Ast::constant(0.0), Ast::constant(1.0), Ast::constant(0.0),
                      Ast::constant(0.0), parse("x1^2"), "pp_wave");
}

CausalStructure isotrivially_flat(AstPtr fy, int n, std::pair<int, int> sig,
                                  std::string name) {
  std::set<std::string> yvars;
  for (int a = 1; a <= n - 1; ++a) yvars.insert("y" + std::to_string(a));
  if (!uses_only(*fy, yvars))
    throw Error(ErrorKind::BadInput,
                "isotrivially flat structures take fiber-only defining functions");
  return make_structure(n, sig, std::move(fy), {}, std::move(name));
}

namespace {

// 2D metric du^2 + S_K(u+1)^2 dv^2 has constant Gauss curvature K; the shift
// keeps the K = 0 limit regular on the sample box.
std::string warp_profile_sq(double k, const std::string& var) {
  if (k == 0.0) return "1";
  if (k > 0.0) {
    std::string r = num(std::sqrt(k));
    return "(sin(" + r + "*(" + var + "+1))/" + r + ")^2";
  }
  std::string r = num(std::sqrt(-k));
  // sinh via exponentials; the expression language keeps a small function set
  return "((exp(" + r + "*(" + var + "+1))-exp(-" + r + "*(" + var + "+1)))/(2*" + r +
         "))^2";
}

}  // namespace

Metric warped_product_surfaces(double k1, double k2, AstPtr f, std::string name) {
  std::set<std::string> allowed = {"x0", "x1"};
  if (!uses_only(*f, allowed))
    throw Error(ErrorKind::BadInput, "warp factor may only depend on x0, x1");
  std::string fs = to_string(*f);
  std::map<std::string, std::string> e;
  e["g00"] = "1";
  e["g11"] = warp_profile_sq(k1, "x0");
  e["g22"] = "-(" + fs + ")";
  e["g33"] = "-(" + fs + ")*" + warp_profile_sq(k2, "x2");
  return metric_from_entries(4, {2, 2}, e, {}, std::move(name));
}

namespace {

std::vector<CatalogEntry> build_catalog() {
  std::vector<CatalogEntry> v;

  v.push_back({"flat_quadric_22", "structure",
               "flat split quadric, n=3, fiber inertia (1,1)",
               {{"fubini_zero", "quadratic fiber"},
                {"wsf_zero", "flat model"},
                {"ruled_plus", "F3 = 0"},
                {"ruled_minus", "F3 = 0"}},
               [] { return flat_quadric(1, 1); },
               nullptr});
  v.push_back({"flat_quadric_41", "structure",
               "flat quadric, n=4, fiber inertia (3,0)",
               {{"fubini_zero", "quadratic fiber"}, {"wsf_zero", "flat model"}},
               [] { return flat_quadric(3, 0); },
               nullptr});
  v.push_back({"flat_quadric_32", "structure",
               "flat quadric, n=4, fiber inertia (2,1)",
               {{"fubini_zero", "quadratic fiber"}, {"wsf_zero", "flat model"}},
               [] { return flat_quadric(2, 1); },
               nullptr});
  v.push_back({"cayley", "structure",
               "isotrivially flat scroll cone y0 = y1 y2 + y1^3/3",
               {{"ruled_plus", "one ruling family survives"},
                {"fubini_zero=false", "cubic fiber"},
                {"wsf_zero", "no base dependence"}},
               [] { return cayley_scroll(); },
               nullptr});
  v.push_back({"iso_cubic", "structure",
               "isotrivially flat cubic perturbation of the split quadric",
               {{"wsf_zero", "no base dependence"}},
               [] {
                 return isotrivially_flat(parse("y1*y2 + 0.25*y1^3 + 0.2*y2^3"), 3,
                                          {1, 1}, "iso_cubic");
               },
               nullptr});
  v.push_back({"pp_wave", "structure",
               "split pp-wave cone y0 = y1 y2 + x1^2",
               {{"fubini_zero", "quadratic fiber"},
                {"wsf_zero=false", "curved conformal structure"}},
               [] { return pp_wave(); },
               nullptr});
  v.push_back({"halfflat_family", "structure",
               "scroll family with separable c12; exploratory, no flags attached",
               {{"ruled_plus", "scroll normal form keeps one ruling"}},
               [] {
                 return cubic_family(parse("1 + 0.1*x3"),
                                     parse("(1 + 0.2*x1)*(1 + 0.2*x2)*(1 + 0.1*x3)"),
                                     parse("0.1*x1*x3"), parse("0.1*x2"),
                                     parse("0.1*x1*x2"), "halfflat_family");
               },
               nullptr});

  v.push_back({"metric_flat", "metric", "flat split metric 2dx0dx3 - 2dx1dx2",
               {{"riemann_zero", "constant coefficients"}},
               nullptr,
               [] {
                 return metric_from_entries(4, {2, 2},
                                            {{"g03", "1"}, {"g12", "-1"}}, {},
                                            "metric_flat");
               }});
  v.push_back({"metric_conformal", "metric",
               "conformally flat metric exp(2 x0) * (2dx0dx3 - 2dx1dx2)",
               {{"weyl_zero", "conformal factor only"}},
               nullptr,
               [] {
                 return metric_from_entries(
                     4, {2, 2}, {{"g03", "exp(2*x0)"}, {"g12", "-exp(2*x0)"}}, {},
                     "metric_conformal");
               }});
  v.push_back({"metric_ppwave", "metric",
               "split pp-wave metric whose cone graph is y1 y2 + x1^2",
               {{"ricci_zero", "vacuum wave"}},
               nullptr,
               [] {
                 return metric_from_entries(
                     4, {2, 2}, {{"g03", "1"}, {"g12", "-1"}, {"g33", "-2*x1^2"}}, {},
                     "metric_ppwave");
               }});
  v.push_back({"warped_flat", "metric",
               "product of two flat surfaces, constant warp 1",
               {{"flat", "both factors flat, f constant"}},
               nullptr,
               [] {
                 return warped_product_surfaces(0.0, 0.0, Ast::constant(1.0),
                                                "warped_flat");
               }});
  v.push_back({"warped_balanced", "metric",
               "curvatures tuned so the trace-free tidal part cancels",
               {{"tidal_tracefree_zero", "K2 = f K1 with constant f; Weyl = 0"}},
               nullptr,
               [] {
                 double f = 1.2;
                 return warped_product_surfaces(0.5, 0.5 * f, Ast::constant(f),
                                                "warped_balanced");
               }});
  v.push_back({"warped_generic", "metric",
               "flat factors with an x-dependent warp",
               {{"tidal_tracefree_zero=false", "log-warp Hessian survives"}},
               nullptr,
               [] {
                 return warped_product_surfaces(0.0, 0.0,
                                                parse("1 + 0.2*x0 + 0.1*x1^2"),
                                                "warped_generic");
               }});
  return v;
}

}  // namespace

const std::vector<CatalogEntry>& catalog_entries() {
  static const std::vector<CatalogEntry> entries = build_catalog();
  return entries;
}

const CatalogEntry* catalog_find(const std::string& name) {
  for (const auto& e : catalog_entries())
    if (e.name == name) return &e;
  return nullptr;
}

CausalStructure catalog_structure(const std::string& name) {
  const CatalogEntry* e = catalog_find(name);
  if (!e) throw Error(ErrorKind::BadInput, "unknown catalog entry '" + name + "'");
  if (e->structure) return e->structure();
  return graph_from_metric(e->metric(), name + "_cone");
}

Metric catalog_metric(const std::string& name) {
  const CatalogEntry* e = catalog_find(name);
  if (!e || !e->metric)
    throw Error(ErrorKind::BadInput, "no catalog metric named '" + name + "'");
  return e->metric();
}

}  // namespace causalgeo
