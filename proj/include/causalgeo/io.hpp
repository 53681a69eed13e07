#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "causalgeo/geometry.hpp"
#include "causalgeo/oracle.hpp"

namespace causalgeo {

// Key-value structure file: dim, signature, optional const lines, and either
// one F line or metric gij lines.
struct StructureFile {
  int dim = 0;
  std::pair<int, int> signature{0, 0};
  std::map<std::string, double> consts;
  std::optional<std::string> f_expr;
  std::map<std::string, std::string> metric_entries;
  std::string name;
};

StructureFile parse_structure_file(const std::string& text, const std::string& name);

// Loads a catalog entry or a file path into a structure (metric inputs go
// through the cone graph).
CausalStructure load_structure(const std::string& name_or_path);
// The paired metric when the input is metric-backed.
std::optional<Metric> load_metric_if_any(const std::string& name_or_path);

// "x0,...,xn;y1,...,y{n-1}"
CPoint parse_point(const std::string& text, int n);

// splitmix64; deterministic across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);

 private:
  std::uint64_t state_;
};

// Random chart points in the sample box with rejection on geometric errors.
std::vector<CPoint> sample_points(const CausalStructure& s, int count, Rng& rng,
                                  double box = 0.5, int max_rejects = 100);

std::string format_double(double v);  // %.17g

}  // namespace causalgeo
