// Times the OpenMP batch kernels against their serial reference and checks
// the outputs stay bitwise identical.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "causalgeo/batch.hpp"
#include "causalgeo/catalog.hpp"
#include "causalgeo/io.hpp"

using namespace causalgeo;

namespace {

double seconds(std::chrono::steady_clock::time_point a,
               std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

bool same_reports(const std::vector<InvariantReport>& a,
                  const std::vector<InvariantReport>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].fubini_norm != b[i].fubini_norm || a[i].pick != b[i].pick ||
        a[i].fplus != b[i].fplus || a[i].fminus != b[i].fminus)
      return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  int npoints = argc > 1 ? std::atoi(argv[1]) : 2000;
  int ntraj = argc > 2 ? std::atoi(argv[2]) : 16;

  std::printf("causalgeo batch benchmark (points=%d, trajectories=%d)\n", npoints, ntraj);
  std::printf("%-18s %12s %12s %9s %6s\n", "kernel", "serial[s]", "parallel[s]",
              "speedup", "match");

  for (const char* name : {"cayley", "pp_wave", "warped_generic"}) {
    CausalStructure s = catalog_structure(name);
    Rng rng(7);
    std::vector<CPoint> pts = sample_points(s, npoints, rng, 0.4);

    auto t0 = std::chrono::steady_clock::now();
    auto a = scan_invariants_serial(s, pts);
    auto t1 = std::chrono::steady_clock::now();
    auto b = scan_invariants_parallel(s, pts);
    auto t2 = std::chrono::steady_clock::now();
    double ts = seconds(t0, t1), tp = seconds(t1, t2);
    std::printf("%-18s %12.4f %12.4f %8.2fx %6s\n",
                (std::string("scan/") + name).c_str(), ts, tp, ts / tp,
                same_reports(a, b) ? "yes" : "NO");
  }

  {
    CausalStructure s = catalog_structure("pp_wave");
    Rng rng(11);
    std::vector<CPoint> starts = sample_points(s, ntraj, rng, 0.3);
    std::vector<GeodesicJob> jobs;
    for (const auto& p : starts) {
      GeodesicJob j;
      j.start = p;
      j.t1 = 1.5;
      j.nsamples = 801;
      jobs.push_back(j);
    }
    auto t0 = std::chrono::steady_clock::now();
    auto a = run_geodesics_serial(s, jobs);
    auto t1 = std::chrono::steady_clock::now();
    auto b = run_geodesics_parallel(s, jobs);
    auto t2 = std::chrono::steady_clock::now();
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i)
      for (std::size_t k = 0; same && k < a[i].optics.size(); ++k)
        if (a[i].optics[k].theta != b[i].optics[k].theta ||
            a[i].optics[k].wsf_norm != b[i].optics[k].wsf_norm)
          same = false;
    double ts = seconds(t0, t1), tp = seconds(t1, t2);
    std::printf("%-18s %12.4f %12.4f %8.2fx %6s\n", "geodesics/pp_wave", ts, tp,
                ts / tp, same ? "yes" : "NO");
  }
  return 0;
}
