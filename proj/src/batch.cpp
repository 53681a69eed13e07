#include "causalgeo/batch.hpp"

#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace causalgeo {

int worker_cap() {
  const char* env = std::getenv("CAUSALGEO_THREADS");
  if (!env) return 0;
  int v = std::atoi(env);
  return v > 0 ? v : 0;
}

namespace {

#ifdef _OPENMP
int effective_threads() {
  int cap = worker_cap();
  int hw = omp_get_max_threads();
  return cap > 0 ? std::min(cap, hw) : hw;
}
#endif

InvariantReport scan_one(const CausalStructure& s, const CPoint& p) {
  return invariant_report(s, p);
}

GeodesicRun run_one(const CausalStructure& s, const GeodesicJob& j) {
  GeodesicRun r;
  r.traj = integrate_characteristic(s, j.start, j.t0, j.t1, j.tol, j.nsamples);
  r.jacobi = propagate_jacobi(s, r.traj, j.tol);
  r.optics = optical_scalars(s, r.traj, r.jacobi, j.exclusion_steps);
  return r;
}

template <typename Item, typename Out, typename Fn>
std::vector<Out> map_serial(const std::vector<Item>& items, Fn fn, BatchError* err) {
  std::vector<Out> out(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    try {
      out[i] = fn(items[i]);
    } catch (const std::exception& e) {
      if (err) {
        *err = {true, i, e.what()};
        return out;
      }
      throw;
    }
  }
  return out;
}

template <typename Item, typename Out, typename Fn>
std::vector<Out> map_parallel(const std::vector<Item>& items, Fn fn, BatchError* err) {
#ifndef _OPENMP
  return map_serial<Item, Out>(items, fn, err);
#else
  std::vector<Out> out(items.size());
  BatchError first;
#pragma omp parallel for schedule(dynamic) num_threads(effective_threads())
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(items.size()); ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fn(items[static_cast<std::size_t>(i)]);
    } catch (const std::exception& e) {
#pragma omp critical
      {
        if (!first.failed || static_cast<std::size_t>(i) < first.index)
          first = {true, static_cast<std::size_t>(i), e.what()};
      }
    }
  }
  if (first.failed) {
    if (err)
      *err = first;
    else
      throw Error(ErrorKind::BadInput, "batch item " + std::to_string(first.index) +
                                           " failed: " + first.message);
  }
  return out;
#endif
}

}  // namespace

std::vector<InvariantReport> scan_invariants_serial(const CausalStructure& s,
                                                    const std::vector<CPoint>& pts,
                                                    BatchError* err) {
  return map_serial<CPoint, InvariantReport>(
      pts, [&](const CPoint& p) { return scan_one(s, p); }, err);
}

std::vector<InvariantReport> scan_invariants_parallel(const CausalStructure& s,
                                                      const std::vector<CPoint>& pts,
                                                      BatchError* err) {
  return map_parallel<CPoint, InvariantReport>(
      pts, [&](const CPoint& p) { return scan_one(s, p); }, err);
}

std::vector<GeodesicRun> run_geodesics_serial(const CausalStructure& s,
                                              const std::vector<GeodesicJob>& jobs,
                                              BatchError* err) {
  return map_serial<GeodesicJob, GeodesicRun>(
      jobs, [&](const GeodesicJob& j) { return run_one(s, j); }, err);
}

std::vector<GeodesicRun> run_geodesics_parallel(const CausalStructure& s,
                                                const std::vector<GeodesicJob>& jobs,
                                                BatchError* err) {
  return map_parallel<GeodesicJob, GeodesicRun>(
      jobs, [&](const GeodesicJob& j) { return run_one(s, j); }, err);
}

}  // namespace causalgeo
