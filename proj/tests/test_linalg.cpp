#include <doctest.h>

#include <cmath>

#include "causalgeo/errors.hpp"
#include "causalgeo/linalg.hpp"
#include "causalgeo/io.hpp"

using namespace causalgeo;

namespace {

Mat mat2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m(0, 0) = a;
  m(0, 1) = b;
  m(1, 0) = c;
  m(1, 1) = d;
  return m;
}

double congruence_residual(const Mat& t, const Mat& h, int p, int q) {
  return (t.transpose() * h * t - signature_matrix(p, q)).max_abs();
}

}  // namespace

TEST_CASE("lu solve and inverse on a small system") {
  Mat a(3, 3);
  double vals[9] = {2, 1, 0, 1, 3, 1, 0, 1, 4};
  for (int i = 0; i < 9; ++i) a.data()[static_cast<std::size_t>(i)] = vals[i];
  std::vector<double> b = {1, 2, 3};
  std::vector<double> x = solve(a, b);
  std::vector<double> back = a.apply(x);
  for (int i = 0; i < 3; ++i) CHECK(back[static_cast<std::size_t>(i)] == doctest::Approx(b[static_cast<std::size_t>(i)]));
  Mat ai = inverse(a);
  Mat id = a * ai;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(id(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
  CHECK(det(a) == doctest::Approx(2 * (3 * 4 - 1) - 1 * 4));
}

TEST_CASE("symmetric eigenvalues of a known matrix") {
  Mat m = mat2(0, 1, 1, 0);
  SymEigen e = sym_eigen(m);
  CHECK(e.values[0] == doctest::Approx(-1.0));
  CHECK(e.values[1] == doctest::Approx(1.0));
  CHECK(inertia_of(m, 1e-12) == std::pair<int, int>{1, 1});
}

TEST_CASE("congruence normalization of a diagonal form") {
  Mat h = mat2(2, 0, 0, -2);
  Mat t = normalize_sff(h, {1, 1});
  CHECK(congruence_residual(t, h, 1, 1) < 1e-14);
  CHECK(t(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(t(1, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(std::abs(t(0, 1)) < 1e-15);
  CHECK(std::abs(t(1, 0)) < 1e-15);
}

TEST_CASE("congruence normalization of the hyperbolic form") {
  Mat h = mat2(0, 1, 1, 0);
  Mat t = normalize_sff(h, {1, 1});
  CHECK(congruence_residual(t, h, 1, 1) < 1e-14);
  // the zero diagonal forces a 2x2 pivot; entries are 1/sqrt(2) up to sign
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(t(i, j)) == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("signature mismatch is reported") {
  Mat h = mat2(1, 0, 0, 1);
  CHECK_THROWS_AS(normalize_sff(h, {1, 1}), Error);
  try {
    normalize_sff(h, {1, 1});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SignatureMismatch);
  }
}

TEST_CASE("degenerate pivot is reported") {
  Mat h = mat2(0, 0, 0, 0);
  h(0, 0) = 1e-30;
  CHECK_THROWS_AS(normalize_sff(h, {1, 1}), Error);
}

TEST_CASE("congruence works on random indefinite forms of several sizes") {
  Rng rng(99);
  for (int n = 2; n <= 5; ++n)
    for (int trial = 0; trial < 20; ++trial) {
      Mat a(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          a(i, j) = rng.uniform(-1, 1);
          a(j, i) = a(i, j);
        }
      auto [p, q] = inertia_of(a, 1e-8 * a.frobenius());
      if (p + q != n) continue;  // skip near-singular draws
      Mat t = normalize_sff(a, {p, q});
      CHECK(congruence_residual(t, a, p, q) < 1e-10);
    }
}

TEST_CASE("seeded normalization follows a rotating form continuously") {
  // h(s) = R(s)^t diag(2,-1) R(s): the seeded chain must not jump
  auto rot = [](double s) {
    Mat r = mat2(std::cos(s), -std::sin(s), std::sin(s), std::cos(s));
    return r.transpose() * Mat::diag({2.0, -1.0}) * r;
  };
  Mat prev = normalize_sff(rot(0.0), {1, 1});
  for (int k = 1; k <= 40; ++k) {
    double s = 0.015 * k;
    Mat t = normalize_sff(rot(s), {1, 1}, &prev);
    CHECK(congruence_residual(t, rot(s), 1, 1) < 1e-10);
    CHECK(op_norm(t - prev) < 0.1);
    prev = t;
  }
}

TEST_CASE("indefinite polar factor snaps a perturbed gauge element back") {
  // boost in O(1,1) plus a small perturbation
  double b = 0.3;
  Mat q = mat2(std::cosh(b), std::sinh(b), std::sinh(b), std::cosh(b));
  Mat noisy = q;
  noisy(0, 1) += 1e-4;
  Mat snapped = polar_opq(noisy, 1, 1);
  Mat e = signature_matrix(1, 1);
  CHECK((snapped.transpose() * e * snapped - e).max_abs() < 1e-12);
  CHECK((snapped - q).max_abs() < 1e-3);
}

TEST_CASE("jet linear solve agrees with the real solve on constants") {
  Rng rng(3);
  int n = 3;
  Mat a(n, n);
  std::vector<double> b(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    b[static_cast<std::size_t>(i)] = rng.uniform(-1, 1);
    for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(-1, 1) + (i == j ? 2.0 : 0.0);
  }
  std::vector<std::vector<Jet>> aj(static_cast<std::size_t>(n),
                                   std::vector<Jet>(static_cast<std::size_t>(n)));
  std::vector<Jet> bj;
  for (int i = 0; i < n; ++i) {
    bj.push_back(Jet::constant(b[static_cast<std::size_t>(i)], 2, 1));
    for (int j = 0; j < n; ++j)
      aj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = Jet::constant(a(i, j), 2, 1);
  }
  std::vector<double> xr = solve(a, b);
  std::vector<Jet> xj = solve_jet(aj, bj, 1e-14);
  for (int i = 0; i < n; ++i)
    CHECK(xj[static_cast<std::size_t>(i)].value() == doctest::Approx(xr[static_cast<std::size_t>(i)]));
}

TEST_CASE("rank counts pivots above the tolerance") {
  Mat m(3, 3);
  m(0, 0) = 1;
  m(1, 1) = 1;  // rank 2
  CHECK(rank(m, 1e-12) == 2);
  m(2, 2) = 1;
  CHECK(rank(m, 1e-12) == 3);
}

TEST_CASE("eigen2 closed form") {
  Eig2 e = eigen2(mat2(2, 1, 1, 2));
  CHECK(e.re[0] == doctest::Approx(1.0));
  CHECK(e.re[1] == doctest::Approx(3.0));
  Eig2 rot = eigen2(mat2(0, -1, 1, 0));
  CHECK(rot.re[0] == doctest::Approx(0.0));
  CHECK(rot.im[1] == doctest::Approx(1.0));
}
