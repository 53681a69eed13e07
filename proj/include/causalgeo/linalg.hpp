#pragma once

#include <utility>
#include <vector>

#include "causalgeo/jet.hpp"

namespace causalgeo {

// Dense row-major matrix for the small dimensions this code works at.
class Mat {
 public:
  Mat() : nr_(0), nc_(0) {}
  Mat(int nr, int nc) : nr_(nr), nc_(nc), a_(static_cast<std::size_t>(nr * nc), 0.0) {}
  static Mat identity(int n);
  static Mat diag(const std::vector<double>& d);

  int rows() const { return nr_; }
  int cols() const { return nc_; }
  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i * nc_ + j)]; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i * nc_ + j)]; }
  const std::vector<double>& data() const { return a_; }
  std::vector<double>& data() { return a_; }

  Mat transpose() const;
  Mat operator*(const Mat& o) const;
  Mat operator+(const Mat& o) const;
  Mat operator-(const Mat& o) const;
  Mat operator*(double s) const;
  std::vector<double> apply(const std::vector<double>& v) const;

  double frobenius() const;
  double max_abs() const;
  double trace() const;

 private:
  int nr_, nc_;
  std::vector<double> a_;
};

// diag(+1 x p, -1 x q)
Mat signature_matrix(int p, int q);

// LU with partial pivoting.
struct LuResult {
  Mat lu;
  std::vector<int> perm;
  double det;
  bool singular;
};
LuResult lu_factor(const Mat& a);
std::vector<double> lu_solve(const LuResult& f, const std::vector<double>& b);
std::vector<double> solve(const Mat& a, const std::vector<double>& b);
Mat inverse(const Mat& a);
double det(const Mat& a);
int rank(const Mat& a, double tol);

// Eigenvalues/vectors of a symmetric matrix by cyclic Jacobi rotations.
struct SymEigen {
  std::vector<double> values;  // ascending
  Mat vectors;                 // columns
};
SymEigen sym_eigen(const Mat& a);

// Largest singular value (2-norm).
double op_norm(const Mat& a);

// Inertia (#positive, #negative) with a zero threshold.
std::pair<int, int> inertia_of(const Mat& h, double threshold);

// Congruence transform T with T^t h T = diag(+1 x p, -1 x q), built from a
// pivoted LDL^t factorization (1x1 and 2x2 pivots) followed by per-block
// scaling. Column order puts the +1 blocks first. Throws SignatureMismatch
// when the computed inertia differs from (p, q) and SingularMatrix when a
// pivot falls below 1e-12 * ||h||.
// With a seed, the result is post-composed with the eps-orthogonal factor
// closest to the seed (polar-type alignment) so frames vary continuously
// along curves. Without a seed the residual O(p,q) gauge for the 2x2 split
// case is pinned deterministically (null-direction ordering and sign).
Mat normalize_sff(const Mat& h, std::pair<int, int> sig, const Mat* seed = nullptr);

// Nearest eps-orthogonal factor of m (m assumed close to O(p,q)), via the
// averaging iteration q <- (q + eps q^-t eps)/2.
Mat polar_opq(const Mat& m, int p, int q);

// Linear solve with jet-valued entries; pivoting on constant terms.
std::vector<Jet> solve_jet(std::vector<std::vector<Jet>> a, std::vector<Jet> b,
                           double degeneracy_tol);

// Eigenvalues of a general small matrix (2x2 closed form, otherwise via
// the symmetric part is not acceptable; only n<=2 supported where needed).
struct Eig2 {
  double re[2];
  double im[2];
};
Eig2 eigen2(const Mat& m);

}  // namespace causalgeo
