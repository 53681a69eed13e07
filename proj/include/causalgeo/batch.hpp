#pragma once

#include <string>
#include <vector>

#include "causalgeo/flow.hpp"
#include "causalgeo/geometry.hpp"

namespace causalgeo {

// Batch drivers. Every parallel kernel has a serial twin with the identical
// per-item code path; tests pin the outputs of the two against each other
// bitwise, and the bench tool times them.

// Worker cap from CAUSALGEO_THREADS (0 = library default).
int worker_cap();

struct BatchError {
  bool failed = false;
  std::size_t index = 0;
  std::string message;
};

std::vector<InvariantReport> scan_invariants_serial(const CausalStructure& s,
                                                    const std::vector<CPoint>& pts,
                                                    BatchError* err = nullptr);
std::vector<InvariantReport> scan_invariants_parallel(const CausalStructure& s,
                                                      const std::vector<CPoint>& pts,
                                                      BatchError* err = nullptr);

struct GeodesicJob {
  CPoint start;
  double t0 = 0.0;
  double t1 = 2.0;
  double tol = 1e-9;
  int nsamples = 401;
  double exclusion_steps = 10.0;
};

struct GeodesicRun {
  Trajectory traj;
  JacobiData jacobi;
  std::vector<OpticalSample> optics;
};

std::vector<GeodesicRun> run_geodesics_serial(const CausalStructure& s,
                                              const std::vector<GeodesicJob>& jobs,
                                              BatchError* err = nullptr);
std::vector<GeodesicRun> run_geodesics_parallel(const CausalStructure& s,
                                                const std::vector<GeodesicJob>& jobs,
                                                BatchError* err = nullptr);

}  // namespace causalgeo
