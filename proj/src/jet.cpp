#include "causalgeo/jet.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <unordered_map>

namespace causalgeo {

const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::TangentiallyDegenerate: return "TangentiallyDegenerate";
    case ErrorKind::SignatureMismatch: return "SignatureMismatch";
    case ErrorKind::ChartExit: return "ChartExit";
    case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorKind::ConjugatePoint: return "ConjugatePoint";
    case ErrorKind::DegenerateMetric: return "DegenerateMetric";
    case ErrorKind::NoRealRoot: return "NoRealRoot";
    case ErrorKind::BranchAmbiguity: return "BranchAmbiguity";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::UnboundVariable: return "UnboundVariable";
    case ErrorKind::BadInput: return "BadInput";
  }
  return "Unknown";
}

MultiIndex::MultiIndex(std::vector<int> exps) {
  e_.reserve(exps.size());
  for (int v : exps) {
    if (v < 0) throw Error(ErrorKind::BadInput, "negative exponent");
    e_.push_back(static_cast<std::uint8_t>(v));
  }
}

MultiIndex MultiIndex::zero(int nvars) {
  MultiIndex a;
  a.e_.assign(static_cast<std::size_t>(nvars), 0);
  return a;
}

MultiIndex MultiIndex::unit(int nvars, int var) {
  if (var < 0 || var >= nvars)
    throw Error(ErrorKind::IndexOutOfRange, "multi-index variable out of range");
  MultiIndex a = zero(nvars);
  a.e_[static_cast<std::size_t>(var)] = 1;
  return a;
}

int MultiIndex::degree() const {
  int d = 0;
  for (auto v : e_) d += v;
  return d;
}

MultiIndex MultiIndex::plus(const MultiIndex& o) const {
  MultiIndex r = *this;
  for (std::size_t i = 0; i < e_.size(); ++i)
    r.e_[i] = static_cast<std::uint8_t>(r.e_[i] + o.e_[i]);
  return r;
}

bool MultiIndex::operator<(const MultiIndex& o) const {
  int da = degree(), db = o.degree();
  if (da != db) return da < db;
  return e_ < o.e_;  // lexicographic within a degree
}

std::string MultiIndex::to_string() const {
  std::string s = "(";
  for (std::size_t i = 0; i < e_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(static_cast<int>(e_[i]));
  }
  return s + ")";
}

double factorial_of(const MultiIndex& a) {
  double f = 1.0;
  for (int i = 0; i < a.nvars(); ++i)
    for (int k = 2; k <= a[i]; ++k) f *= k;
  return f;
}

namespace {

constexpr int kDenseMaxVars = 12;

std::uint64_t pack_key(const std::vector<std::uint8_t>& e) {
  std::uint64_t k = 0;
  for (std::size_t i = 0; i < e.size(); ++i)
    k |= static_cast<std::uint64_t>(e[i]) << (5 * i);
  return k;
}

// Rank table for one (nvars, order) shape: monomials in graded-lex order plus
// a packed-key lookup. Tables are built once and never freed.
struct IndexTable {
  int nvars = 0;
  int order = 0;
  std::vector<std::vector<std::uint8_t>> mono;  // rank -> exponents
  std::vector<int> deg;                         // rank -> degree
  std::vector<int> deg_end;                     // monomials with degree <= d
  std::unordered_map<std::uint64_t, int> rank;

  int rank_of_key(std::uint64_t k) const {
    auto it = rank.find(k);
    return it == rank.end() ? -1 : it->second;
  }
};

void gen_monomials(int nvars, int order, std::vector<std::uint8_t>& cur, int pos,
                   int left, std::vector<std::vector<std::uint8_t>>& out) {
  if (pos == nvars) {
    out.push_back(cur);
    return;
  }
  for (int v = 0; v <= left; ++v) {
    cur[static_cast<std::size_t>(pos)] = static_cast<std::uint8_t>(v);
    gen_monomials(nvars, order, cur, pos + 1, left - v, out);
  }
  cur[static_cast<std::size_t>(pos)] = 0;
}

const IndexTable* get_table(int nvars, int order) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, const IndexTable*> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(nvars, order);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  auto* t = new IndexTable;
  t->nvars = nvars;
  t->order = order;
  std::vector<std::uint8_t> cur(static_cast<std::size_t>(nvars), 0);
  gen_monomials(nvars, order, cur, 0, order, t->mono);
  std::sort(t->mono.begin(), t->mono.end(),
            [](const std::vector<std::uint8_t>& a,
               const std::vector<std::uint8_t>& b) {
              int da = 0, db = 0;
              for (auto v : a) da += v;
              for (auto v : b) db += v;
              if (da != db) return da < db;
              return a < b;
            });
  t->deg.resize(t->mono.size());
  t->deg_end.assign(static_cast<std::size_t>(order) + 1, 0);
  for (std::size_t r = 0; r < t->mono.size(); ++r) {
    int d = 0;
    for (auto v : t->mono[r]) d += v;
    t->deg[r] = d;
    t->rank.emplace(pack_key(t->mono[r]), static_cast<int>(r));
  }
  for (int d = 0; d <= order; ++d) {
    int cnt = 0;
    for (std::size_t r = 0; r < t->mono.size(); ++r)
      if (t->deg[r] <= d) ++cnt;
    t->deg_end[static_cast<std::size_t>(d)] = cnt;
  }
  cache.emplace(key, t);
  return t;
}

const IndexTable* table_of(const void* p) {
  return static_cast<const IndexTable*>(p);
}

}  // namespace

Jet::Jet(int nvars, int order) : nvars_(nvars), order_(order) {
  if (nvars < 0 || order < 0)
    throw Error(ErrorKind::BadInput, "bad jet shape");
  dense_ = nvars <= kDenseMaxVars;
  if (dense_) {
    const IndexTable* t = get_table(nvars, order);
    table_ = t;
    c_.assign(t->mono.size(), 0.0);
  }
}

Jet Jet::constant(double v, int nvars, int order) {
  Jet j(nvars, order);
  if (j.dense_)
    j.c_[0] = v;
  else if (v != 0.0)
    j.m_[std::vector<std::uint8_t>(static_cast<std::size_t>(nvars), 0)] = v;
  return j;
}

Jet Jet::variable(int index, double value, int nvars, int order) {
  if (index < 0 || index >= nvars)
    throw Error(ErrorKind::IndexOutOfRange, "jet variable index out of range");
  Jet j = constant(value, nvars, order);
  if (order >= 1) {
    std::vector<std::uint8_t> e(static_cast<std::size_t>(nvars), 0);
    e[static_cast<std::size_t>(index)] = 1;
    if (j.dense_) {
      int r = table_of(j.table_)->rank_of_key(pack_key(e));
      j.c_[static_cast<std::size_t>(r)] = 1.0;
    } else {
      j.m_[e] = 1.0;
    }
  }
  return j;
}

void Jet::check_shape(const Jet& o) const {
  if (!same_shape(o))
    throw Error(ErrorKind::BadInput, "jet shape mismatch");
}

double Jet::value() const {
  if (nvars_ == 0 && c_.empty() && m_.empty()) return 0.0;
  if (dense_) return c_.empty() ? 0.0 : c_[0];
  auto it = m_.find(std::vector<std::uint8_t>(static_cast<std::size_t>(nvars_), 0));
  return it == m_.end() ? 0.0 : it->second;
}

double Jet::coeff(const MultiIndex& a) const {
  if (a.nvars() != nvars_)
    throw Error(ErrorKind::BadInput, "multi-index arity mismatch");
  if (a.degree() > order_)
    throw Error(ErrorKind::IndexOutOfRange, "multi-index degree exceeds jet order");
  if (dense_) {
    int r = table_of(table_)->rank_of_key(pack_key(a.raw()));
    return c_[static_cast<std::size_t>(r)];
  }
  auto it = m_.find(a.raw());
  return it == m_.end() ? 0.0 : it->second;
}

double Jet::partial(const MultiIndex& a) const {
  return factorial_of(a) * coeff(a);
}

Jet Jet::derivative(int var) const {
  if (var < 0 || var >= nvars_)
    throw Error(ErrorKind::IndexOutOfRange, "derivative variable out of range");
  if (order_ < 1)
    throw Error(ErrorKind::DomainError, "cannot differentiate an order-0 jet");
  Jet r(nvars_, order_ - 1);
  if (dense_) {
    const IndexTable* tr = table_of(r.table_);
    const IndexTable* ts = table_of(table_);
    for (std::size_t k = 0; k < tr->mono.size(); ++k) {
      std::vector<std::uint8_t> e = tr->mono[k];
      e[static_cast<std::size_t>(var)]++;
      int rs = ts->rank_of_key(pack_key(e));
      r.c_[k] = c_[static_cast<std::size_t>(rs)] *
                static_cast<double>(e[static_cast<std::size_t>(var)]);
    }
  } else {
    for (const auto& [e, v] : m_) {
      if (e[static_cast<std::size_t>(var)] == 0) continue;
      std::vector<std::uint8_t> d = e;
      d[static_cast<std::size_t>(var)]--;
      int deg = 0;
      for (auto x : d) deg += x;
      if (deg > r.order_) continue;
      r.m_[d] += v * static_cast<double>(e[static_cast<std::size_t>(var)]);
    }
  }
  return r;
}

Jet Jet::operator-() const {
  Jet r = *this;
  for (auto& v : r.c_) v = -v;
  for (auto& [k, v] : r.m_) v = -v;
  return r;
}

Jet operator+(const Jet& a, const Jet& b) {
  a.check_shape(b);
  Jet r = a;
  if (r.dense_) {
    for (std::size_t i = 0; i < r.c_.size(); ++i) r.c_[i] += b.c_[i];
  } else {
    for (const auto& [k, v] : b.m_) r.m_[k] += v;
  }
  return r;
}

Jet operator-(const Jet& a, const Jet& b) { return a + (-b); }

Jet operator*(const Jet& a, const Jet& b) {
  a.check_shape(b);
  Jet r(a.nvars_, a.order_);
  if (a.dense_) {
    const IndexTable* t = table_of(a.table_);
    for (std::size_t i = 0; i < a.c_.size(); ++i) {
      double ai = a.c_[i];
      if (ai == 0.0) continue;
      int room = a.order_ - t->deg[i];
      std::uint64_t ki = pack_key(t->mono[i]);
      int jmax = t->deg_end[static_cast<std::size_t>(room)];
      for (int j = 0; j < jmax; ++j) {
        double bj = b.c_[static_cast<std::size_t>(j)];
        if (bj == 0.0) continue;
        int rr = t->rank_of_key(ki + pack_key(t->mono[static_cast<std::size_t>(j)]));
        r.c_[static_cast<std::size_t>(rr)] += ai * bj;
      }
    }
  } else {
    for (const auto& [ka, va] : a.m_) {
      int da = 0;
      for (auto x : ka) da += x;
      for (const auto& [kb, vb] : b.m_) {
        int db = 0;
        for (auto x : kb) db += x;
        if (da + db > a.order_) continue;
        std::vector<std::uint8_t> ks = ka;
        for (std::size_t q = 0; q < ks.size(); ++q)
          ks[q] = static_cast<std::uint8_t>(ks[q] + kb[q]);
        r.m_[ks] += va * vb;
      }
    }
  }
  return r;
}

Jet Jet::compose_series(const Jet& a, const std::vector<double>& d) {
  // f(a0 + u) = sum d[k] u^k with u nilpotent beyond the truncation order.
  Jet u = a;
  if (u.dense_)
    u.c_[0] = 0.0;
  else
    u.m_.erase(std::vector<std::uint8_t>(static_cast<std::size_t>(u.nvars_), 0));
  Jet r = Jet::constant(d[0], a.nvars_, a.order_);
  Jet p = Jet::constant(1.0, a.nvars_, a.order_);
  for (int k = 1; k <= a.order_ && k < static_cast<int>(d.size()); ++k) {
    p = p * u;
    r = r + d[static_cast<std::size_t>(k)] * p;
  }
  return r;
}

Jet operator/(const Jet& a, const Jet& b) {
  a.check_shape(b);
  double b0 = b.value();
  if (b0 == 0.0)
    throw Error(ErrorKind::DomainError, "division by jet with zero constant term");
  // 1/(b0 + u) as a geometric series, then multiply.
  std::vector<double> d(static_cast<std::size_t>(b.order_) + 1);
  double p = 1.0 / b0;
  for (int k = 0; k <= b.order_; ++k) {
    d[static_cast<std::size_t>(k)] = p;
    p *= -1.0 / b0;
  }
  return a * Jet::compose_series(b, d);
}

Jet operator+(const Jet& a, double s) {
  Jet r = a;
  if (r.dense_)
    r.c_[0] += s;
  else
    r.m_[std::vector<std::uint8_t>(static_cast<std::size_t>(r.nvars_), 0)] += s;
  return r;
}
Jet operator+(double s, const Jet& a) { return a + s; }
Jet operator-(const Jet& a, double s) { return a + (-s); }
Jet operator-(double s, const Jet& a) { return (-a) + s; }
Jet operator*(const Jet& a, double s) {
  Jet r = a;
  for (auto& v : r.c_) v *= s;
  for (auto& [k, v] : r.m_) v *= s;
  return r;
}
Jet operator*(double s, const Jet& a) { return a * s; }
Jet operator/(const Jet& a, double s) { return a * (1.0 / s); }
Jet operator/(double s, const Jet& a) {
  return Jet::constant(s, a.nvars(), a.order()) / a;
}

Jet exp(const Jet& a) {
  double e0 = std::exp(a.value());
  std::vector<double> d(static_cast<std::size_t>(a.order()) + 1);
  double f = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    if (k > 0) f *= k;
    d[static_cast<std::size_t>(k)] = e0 / f;
  }
  return Jet::compose_series(a, d);
}

Jet log(const Jet& a) {
  double a0 = a.value();
  if (!(a0 > 0.0))
    throw Error(ErrorKind::DomainError, "log of non-positive constant term");
  std::vector<double> d(static_cast<std::size_t>(a.order()) + 1);
  d[0] = std::log(a0);
  double p = 1.0 / a0;
  for (int k = 1; k <= a.order(); ++k) {
    d[static_cast<std::size_t>(k)] = ((k % 2) ? 1.0 : -1.0) * p / k;
    p /= a0;
  }
  return Jet::compose_series(a, d);
}

Jet sin(const Jet& a) {
  double s = std::sin(a.value()), c = std::cos(a.value());
  // cycle s, c, -s, -c
  std::vector<double> d(static_cast<std::size_t>(a.order()) + 1);
  double cyc[4] = {s, c, -s, -c};
  double f = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    if (k > 0) f *= k;
    d[static_cast<std::size_t>(k)] = cyc[k % 4] / f;
  }
  return Jet::compose_series(a, d);
}

Jet cos(const Jet& a) {
  double s = std::sin(a.value()), c = std::cos(a.value());
  std::vector<double> d(static_cast<std::size_t>(a.order()) + 1);
  double cyc[4] = {c, -s, -c, s};
  double f = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    if (k > 0) f *= k;
    d[static_cast<std::size_t>(k)] = cyc[k % 4] / f;
  }
  return Jet::compose_series(a, d);
}

Jet sqrt(const Jet& a) {
  double a0 = a.value();
  if (!(a0 > 0.0))
    throw Error(ErrorKind::DomainError, "sqrt of non-positive constant term");
  std::vector<double> d(static_cast<std::size_t>(a.order()) + 1);
  // binom(1/2, k) a0^(1/2 - k)
  double coef = 1.0;
  double p = std::sqrt(a0);
  for (int k = 0; k <= a.order(); ++k) {
    d[static_cast<std::size_t>(k)] = coef * p;
    coef *= (0.5 - k) / (k + 1);
    p /= a0;
  }
  return Jet::compose_series(a, d);
}

Jet pow_int(const Jet& a, long long k) {
  if (k < 0) return Jet::constant(1.0, a.nvars(), a.order()) / pow_int(a, -k);
  Jet r = Jet::constant(1.0, a.nvars(), a.order());
  Jet base = a;
  long long e = k;
  while (e > 0) {
    if (e & 1) r = r * base;
    base = base * base;
    e >>= 1;
  }
  return r;
}

Jet pow(const Jet& a, double r) {
  double ri = std::nearbyint(r);
  if (r == ri && std::abs(r) <= 64.0)
    return pow_int(a, static_cast<long long>(ri));
  // non-integer exponents go through exp(r log a) for domain safety
  return exp(r * log(a));
}

Jet truncate(const Jet& j, int new_order) {
  if (new_order >= j.order()) return j;
  Jet r(j.nvars(), new_order);
  if (j.dense_) {
    const IndexTable* tr = table_of(r.table_);
    const IndexTable* ts = table_of(j.table_);
    for (std::size_t k = 0; k < tr->mono.size(); ++k) {
      int rs = ts->rank_of_key(pack_key(tr->mono[k]));
      r.c_[k] = j.c_[static_cast<std::size_t>(rs)];
    }
  } else {
    for (const auto& [e, v] : j.m_) {
      int d = 0;
      for (auto x : e) d += x;
      if (d <= new_order) r.m_[e] = v;
    }
  }
  return r;
}

}  // namespace causalgeo
