#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "causalgeo/expr.hpp"
#include "causalgeo/jet.hpp"
#include "causalgeo/linalg.hpp"

namespace causalgeo {

// Chart point: base coordinates x0..xn plus affine fiber coordinates
// y1..y{n-1}. The cone coordinate y0 = F(x;y) is always derived.
struct CPoint {
  std::vector<double> x;
  std::vector<double> y;
};

// Defining function y0 = F(x; y), evaluable over jets. Implementations are
// an expression tree or a root of a metric null-cone equation.
class DefiningFunction {
 public:
  virtual ~DefiningFunction() = default;
  // xy holds jets of x0..xn then y1..y{n-1}; all share shape.
  // branch_seed, when given, selects the root whose value is nearest to it
  // (only meaningful for multi-branch cones).
  virtual Jet eval(const std::vector<Jet>& xy, const double* branch_seed) const = 0;
};

class AstDefining : public DefiningFunction {
 public:
  AstDefining(int n, AstPtr ast, std::map<std::string, double> consts);
  Jet eval(const std::vector<Jet>& xy, const double* branch_seed) const override;
  const Ast& ast() const { return *ast_; }

 private:
  int n_;
  AstPtr ast_;
  std::map<std::string, double> consts_;
};

struct CausalStructure {
  int n = 3;                        // dim M = n + 1
  std::pair<int, int> signature{1, 1};  // inertia (p, q) of the fiber Hessian
  std::shared_ptr<const DefiningFunction> defining;
  std::string name;

  int dim() const { return n + 1; }
  int fiber_dim() const { return n - 1; }

  void validate() const;

  // Jet of F in the fiber variables only (x frozen). nvars = n-1.
  Jet f_jet_y(const CPoint& p, int order, const double* branch_seed = nullptr) const;
  // Jet of F in all chart variables x0..xn, y1..y{n-1}. nvars = 2n.
  Jet f_jet_xy(const CPoint& p, int order, const double* branch_seed = nullptr) const;
  double f_value(const CPoint& p, const double* branch_seed = nullptr) const;
};

CausalStructure make_structure(int n, std::pair<int, int> sig, AstPtr f,
                               std::map<std::string, double> consts,
                               std::string name);

struct HessianData {
  Mat H;      // vertical Hessian d2F/dy^a dy^b
  Mat Hinv;
  std::pair<int, int> inertia;
  double det;
  double d3_norm;  // Frobenius norm of the third fiber derivatives
};

// Throws TangentiallyDegenerate / SignatureMismatch.
HessianData vertical_hessian(const CausalStructure& s, const CPoint& p,
                             const double* branch_seed = nullptr);

struct AdaptedCoframe {
  CPoint point;
  Mat W;     // 2n x 2n rows: omega0, omega^a, omega^n, theta_a over (dx, dy)
  Mat T;     // fiber normalization, T^t H T = I_{p,q}
  Mat Tinv;
  Mat H;
  Mat Hinv;
  double F = 0.0;
  std::vector<double> gradF;  // dF/dy^a
};

AdaptedCoframe adapted_coframe(const CausalStructure& s, const CPoint& p,
                               const Mat* seedT = nullptr,
                               const double* branch_seed = nullptr);

struct FubiniCubic {
  int m = 0;                    // n - 1
  std::vector<double> F3;       // eps-frame components, m^3, index (a*m+b)*m+c
  std::vector<double> F3_coord; // before the frame normalization
  double pick = 0.0;            // F_abc F^abc in the eps frame
  std::vector<double> apolarity;
  double apolarity_resid = 0.0;
  double norm = 0.0;            // Frobenius norm of the eps-frame components
  double zero_scale = 0.0;      // classification threshold
  Mat T;
};

FubiniCubic fubini_cubic(const CausalStructure& s, const CPoint& p,
                         const double* branch_seed = nullptr);

// 4D split signature only: (F+, F-) = (F^1_11 +- F^2_22)/sqrt(2).
std::pair<double, double> split_components(const FubiniCubic& f,
                                           std::pair<int, int> sig);

// Coordinate components of g = 2 omega0 . omega^n - eps_ab omega^a . omega^b.
Mat quadratic_form_g(const AdaptedCoframe& cf);

// Fiber derivative of the degree-2 homogenized Lagrangian at (F(p), y, 1).
std::vector<double> legendre(const CausalStructure& s, const CPoint& p);
// Euler pairing p_i y^i on the cone; zero up to roundoff.
double legendre_graph_check(const CausalStructure& s, const CPoint& p);

struct InvariantReport {
  CPoint point;
  std::pair<int, int> inertia;
  double fubini_norm = 0.0;
  double pick = 0.0;
  double apolarity_resid = 0.0;
  bool has_split = false;
  double fplus = 0.0;
  double fminus = 0.0;
  bool fubini_zero = false;
  bool ruled_plus = false;
  bool ruled_minus = false;
  double zero_scale = 0.0;
};

InvariantReport invariant_report(const CausalStructure& s, const CPoint& p);

}  // namespace causalgeo
