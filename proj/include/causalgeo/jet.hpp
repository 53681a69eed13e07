#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "causalgeo/errors.hpp"

namespace causalgeo {

// Exponent tuple of a Taylor monomial. Comparison is graded-lex.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> exps);
  static MultiIndex zero(int nvars);
  static MultiIndex unit(int nvars, int var);

  int nvars() const { return static_cast<int>(e_.size()); }
  int degree() const;
  int operator[](int i) const { return e_[static_cast<std::size_t>(i)]; }
  MultiIndex plus(const MultiIndex& o) const;

  bool operator==(const MultiIndex& o) const { return e_ == o.e_; }
  bool operator<(const MultiIndex& o) const;  // graded-lex, total

  std::string to_string() const;

  const std::vector<std::uint8_t>& raw() const { return e_; }

 private:
  std::vector<std::uint8_t> e_;
};

double factorial_of(const MultiIndex& a);

class Jet;
// Copy of j truncated to a lower order.
Jet truncate(const Jet& j, int new_order);

// Truncated multivariate Taylor expansion. Coefficients are stored
// Taylor-normalized (divided by alpha!), so multiplication is a plain
// convolution. Storage is dense (graded-lex rank) while the monomial count
// stays small, with a map fallback for very wide jets. Values are immutable
// after construction.
class Jet {
 public:
  Jet() : nvars_(0), order_(0) {}

  static Jet constant(double v, int nvars, int order);
  // Jet of the coordinate function x_index at the given point.
  static Jet variable(int index, double value, int nvars, int order);

  int nvars() const { return nvars_; }
  int order() const { return order_; }
  double value() const;  // constant term
  double coeff(const MultiIndex& a) const;
  // alpha! * c_alpha; throws if |alpha| exceeds the truncation order.
  double partial(const MultiIndex& a) const;
  // Jet of d/dx_var, truncated one order lower.
  Jet derivative(int var) const;

  Jet operator-() const;
  friend Jet operator+(const Jet& a, const Jet& b);
  friend Jet operator-(const Jet& a, const Jet& b);
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b);
  friend Jet operator+(const Jet& a, double s);
  friend Jet operator+(double s, const Jet& a);
  friend Jet operator-(const Jet& a, double s);
  friend Jet operator-(double s, const Jet& a);
  friend Jet operator*(const Jet& a, double s);
  friend Jet operator*(double s, const Jet& a);
  friend Jet operator/(const Jet& a, double s);
  friend Jet operator/(double s, const Jet& a);

  friend Jet exp(const Jet& a);
  friend Jet log(const Jet& a);
  friend Jet sin(const Jet& a);
  friend Jet cos(const Jet& a);
  friend Jet sqrt(const Jet& a);
  friend Jet pow(const Jet& a, double r);
  friend Jet pow_int(const Jet& a, long long k);
  friend Jet truncate(const Jet& j, int new_order);

  bool same_shape(const Jet& o) const {
    return nvars_ == o.nvars_ && order_ == o.order_;
  }

  // All stored coefficients in graded-lex order (dense path only).
  const std::vector<double>& dense_coeffs() const { return c_; }
  bool is_dense() const { return dense_; }
  const std::map<std::vector<std::uint8_t>, double>& sparse_coeffs() const {
    return m_;
  }

 private:
  Jet(int nvars, int order);
  // f(a) for analytic f given the first derivatives d[k] = f^(k)(a0)/k!.
  static Jet compose_series(const Jet& a, const std::vector<double>& d);
  void check_shape(const Jet& o) const;

  int nvars_;
  int order_;
  bool dense_ = true;
  std::vector<double> c_;                            // dense path
  std::map<std::vector<std::uint8_t>, double> m_;    // sparse fallback
  const void* table_ = nullptr;                      // dense index table
};

}  // namespace causalgeo
