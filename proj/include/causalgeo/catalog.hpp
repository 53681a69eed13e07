#pragma once

#include <functional>
#include <string>
#include <vector>

#include "causalgeo/geometry.hpp"
#include "causalgeo/oracle.hpp"

namespace causalgeo {

// Expected invariant behavior carried by an entry; values are short notes on
// where each expectation comes from.
struct CatalogEntry {
  std::string name;
  std::string kind;  // "structure" or "metric"
  std::string summary;
  std::vector<std::pair<std::string, std::string>> expected;
  std::function<CausalStructure()> structure;  // empty for pure metrics
  std::function<Metric()> metric;              // empty for pure structures
};

const std::vector<CatalogEntry>& catalog_entries();
const CatalogEntry* catalog_find(const std::string& name);
// Structure for a named entry; metric entries go through graph_from_metric.
CausalStructure catalog_structure(const std::string& name);
Metric catalog_metric(const std::string& name);

// Constructors

// F = eps_ab y^a y^b with inertia (p, q); n = p + q + 1.
CausalStructure flat_quadric(int p, int q);
// F = y1 y2 + y1^3/3, the split-signature scroll cone.
CausalStructure cayley_scroll();
// F = c111 (y1)^3/3 + c12 y1 y2 + c1 y1 + c2 y2 + c0 with x-dependent
// coefficients (4D, split signature).
CausalStructure cubic_family(AstPtr c111, AstPtr c12, AstPtr c1, AstPtr c2,
                             AstPtr c0, std::string name = "cubic_family");
CausalStructure pp_wave();
// x-independent defining function; the Hessian signature is checked lazily.
CausalStructure isotrivially_flat(AstPtr fy, int n, std::pair<int, int> sig,
                                  std::string name = "isotrivial");
// Product of two constant-curvature surfaces, the second scaled by -f(x0,x1).
// K arguments must be numeric constants; f may depend on the first factor.
Metric warped_product_surfaces(double k1, double k2, AstPtr f,
                               std::string name = "warped");

}  // namespace causalgeo
