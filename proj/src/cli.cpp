#include "causalgeo/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "causalgeo/batch.hpp"
#include "causalgeo/catalog.hpp"
#include "causalgeo/errors.hpp"
#include "causalgeo/io.hpp"

namespace causalgeo {

namespace {

bool is_config_error(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::BadInput:
    case ErrorKind::IndexOutOfRange:
    case ErrorKind::UnboundVariable:
      return true;
    default:
      return false;
  }
}

std::string flags_token(const InvariantReport& r) {
  std::string s;
  auto add = [&](const char* t) {
    if (!s.empty()) s += "|";
    s += t;
  };
  if (r.fubini_zero) add("fubini_zero");
  if (r.has_split && r.ruled_plus) add("ruled_plus");
  if (r.has_split && r.ruled_minus) add("ruled_minus");
  return s.empty() ? "-" : s;
}

void write_out(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::BadInput, "cannot write '" + path + "'");
  out << content;
}

std::string invariants_header(const CausalStructure& s, bool with_split) {
  std::string h;
  for (int i = 0; i <= s.n; ++i) h += "x" + std::to_string(i) + ",";
  for (int a = 1; a <= s.n - 1; ++a) h += "y" + std::to_string(a) + ",";
  h += "inertia_p,inertia_q,fubini_norm,pick,apolarity_resid";
  if (with_split) h += ",fplus,fminus";
  h += ",flags";
  return h;
}

int cmd_invariants(const std::string& structure, const std::string& at,
                   int samples, std::uint64_t seed, double box,
                   const std::string& out, const std::string& format) {
  CausalStructure s = load_structure(structure);
  bool with_split = s.n == 3 && s.signature == std::pair<int, int>{1, 1};

  std::vector<CPoint> pts;
  if (!at.empty()) {
    pts.push_back(parse_point(at, s.n));
  } else {
    Rng rng(seed);
    pts = sample_points(s, samples, rng, box);
  }

  BatchError err;
  std::vector<InvariantReport> reports = scan_invariants_parallel(s, pts, &err);

  std::ostringstream os;
  std::size_t nrows = err.failed ? err.index : reports.size();
  if (format == "csv") {
    os << invariants_header(s, with_split) << "\n";
    for (std::size_t i = 0; i < nrows; ++i) {
      const InvariantReport& r = reports[i];
      for (double v : r.point.x) os << format_double(v) << ",";
      for (double v : r.point.y) os << format_double(v) << ",";
      os << r.inertia.first << "," << r.inertia.second << ","
         << format_double(r.fubini_norm) << "," << format_double(r.pick) << ","
         << format_double(r.apolarity_resid);
      if (with_split)
        os << "," << format_double(r.fplus) << "," << format_double(r.fminus);
      os << "," << flags_token(r) << "\n";
    }
  } else if (format == "json") {
    os << "[";
    for (std::size_t i = 0; i < nrows; ++i) {
      const InvariantReport& r = reports[i];
      if (i) os << ",";
      os << "\n  {\"x\":[";
      for (std::size_t k = 0; k < r.point.x.size(); ++k)
        os << (k ? "," : "") << format_double(r.point.x[k]);
      os << "],\"y\":[";
      for (std::size_t k = 0; k < r.point.y.size(); ++k)
        os << (k ? "," : "") << format_double(r.point.y[k]);
      os << "],\"inertia_p\":" << r.inertia.first
         << ",\"inertia_q\":" << r.inertia.second
         << ",\"fubini_norm\":" << format_double(r.fubini_norm)
         << ",\"pick\":" << format_double(r.pick)
         << ",\"apolarity_resid\":" << format_double(r.apolarity_resid);
      if (with_split)
        os << ",\"fplus\":" << format_double(r.fplus)
           << ",\"fminus\":" << format_double(r.fminus);
      os << ",\"flags\":\"" << flags_token(r) << "\"}";
    }
    os << "\n]\n";
  } else {
    throw Error(ErrorKind::BadInput, "format must be csv or json");
  }

  if (err.failed) {
    os << "# aborted: point " << err.index << ": " << err.message << "\n";
    write_out(out, os.str());
    std::cerr << "geometric error at point " << err.index << ": " << err.message
              << "\n";
    return 3;
  }
  write_out(out, os.str());
  return 0;
}

std::string geodesic_header(const CausalStructure& s) {
  std::string h = "t,";
  for (int i = 0; i <= s.n; ++i) h += "x" + std::to_string(i) + ",";
  for (int a = 1; a <= s.n - 1; ++a) h += "y" + std::to_string(a) + ",";
  h += "theta,sigma2,omega2,pnn,wsf_norm,raych_residual,omega0_drift";
  return h;
}

int cmd_geodesic(const std::string& structure, const std::string& from,
                 double tmax, double tol, int nsamples, double exclusion,
                 const std::string& out) {
  CausalStructure s = load_structure(structure);
  CPoint p0 = parse_point(from, s.n);

  std::ostringstream os;
  os << geodesic_header(s) << "\n";

  auto write_state_row = [&](double t, const CharState& st) {
    os << format_double(t) << ",";
    for (double v : st.x) os << format_double(v) << ",";
    for (double v : st.y) os << format_double(v) << ",";
  };

  try {
    GeodesicJob job;
    job.start = p0;
    job.t0 = 0.0;
    job.t1 = tmax;
    job.tol = tol;
    job.nsamples = nsamples;
    job.exclusion_steps = exclusion;
    std::vector<GeodesicRun> runs = run_geodesics_serial(s, {job});
    const GeodesicRun& run = runs[0];

    // per-sample omega0 drift, normalized by variation magnitude
    const JacobiData& jd = run.jacobi;
    std::size_t ns = run.traj.samples.size();
    std::vector<double> drift(ns, 0.0);
    for (std::size_t i = 0; i < ns; ++i) {
      double best = 0.0;
      for (std::size_t k = 0; k < jd.omega0[i].size(); ++k) {
        double mag = 0.0;
        for (double c : jd.delta[i][k]) mag = std::max(mag, std::abs(c));
        double wrow = 0.0;
        for (int c = 0; c < run.traj.samples[i].cf.W.cols(); ++c)
          wrow = std::max(wrow, std::abs(run.traj.samples[i].cf.W(0, c)));
        double scale = std::max(1.0, mag * wrow);
        best = std::max(best, std::abs(jd.omega0[i][k] - jd.omega0[0][k]) / scale);
      }
      drift[i] = best;
    }

    for (std::size_t i = 0; i < ns; ++i) {
      const OpticalSample& o = run.optics[i];
      write_state_row(run.traj.samples[i].state.t, run.traj.samples[i].state);
      if (o.valid) {
        os << format_double(o.theta) << "," << format_double(o.sigma2) << ","
           << format_double(o.omega2) << "," << format_double(o.pnn) << ","
           << format_double(o.wsf_norm) << "," << format_double(o.raych_residual);
      } else {
        os << "nan,nan,nan,nan,nan,nan";
      }
      os << "," << format_double(drift[i]) << "\n";
    }
    write_out(out, os.str());
    return 0;
  } catch (const Error& e) {
    if (is_config_error(e)) throw;
    // salvage pass: raw curve up to the failure, then the abort marker
    try {
      double seedF = s.f_value(p0);
      std::vector<double> st;
      st.insert(st.end(), p0.x.begin(), p0.x.end());
      st.insert(st.end(), p0.y.begin(), p0.y.end());
      double t = 0.0;
      double h = tmax / (nsamples - 1);
      for (int i = 0; i < nsamples; ++i) {
        CharState cs;
        cs.t = t;
        cs.x.assign(st.begin(), st.begin() + s.n + 1);
        cs.y.assign(st.begin() + s.n + 1, st.end());
        write_state_row(t, cs);
        os << "nan,nan,nan,nan,nan,nan,nan\n";
        if (i + 1 == nsamples) break;
        auto rhs = [&](double, const std::vector<double>& y, std::vector<double>& dy) {
          CPoint p;
          p.x.assign(y.begin(), y.begin() + s.n + 1);
          p.y.assign(y.begin() + s.n + 1, y.end());
          Velocity v = characteristic_vector(s, p, &seedF);
          seedF = v.xdot[0];
          dy.resize(y.size());
          for (int k = 0; k <= s.n; ++k) dy[static_cast<std::size_t>(k)] = v.xdot[static_cast<std::size_t>(k)];
          for (int a = 0; a < s.n - 1; ++a)
            dy[static_cast<std::size_t>(s.n + 1 + a)] = v.ydot[static_cast<std::size_t>(a)];
        };
        OdeResult seg = integrate_ode(rhs, st, t, t + h, tol, 1e-12, {t + h});
        st = seg.states[0];
        t += h;
      }
    } catch (const Error&) {
      // stop the salvage where it fails
    }
    os << "# aborted: " << e.what() << "\n";
    write_out(out, os.str());
    std::cerr << "geometric error: " << e.what() << "\n";
    return 3;
  }
}

int cmd_classify(const std::string& structure, int samples, int trajectories,
                 std::uint64_t seed, double tmax, double tol,
                 const std::string& out) {
  CausalStructure s = load_structure(structure);
  bool with_split = s.n == 3 && s.signature == std::pair<int, int>{1, 1};
  Rng rng(seed);
  std::vector<CPoint> pts = sample_points(s, samples, rng, 0.5);
  std::vector<InvariantReport> reports = scan_invariants_parallel(s, pts);

  double max_fub = 0.0, max_fp = 0.0, max_fm = 0.0, max_apol = 0.0, zscale = 0.0;
  bool iso = true;
  for (const auto& r : reports) {
    max_fub = std::max(max_fub, r.fubini_norm);
    max_apol = std::max(max_apol, r.apolarity_resid);
    zscale = std::max(zscale, r.zero_scale);
    if (r.has_split) {
      max_fp = std::max(max_fp, std::abs(r.fplus));
      max_fm = std::max(max_fm, std::abs(r.fminus));
    }
  }
  // base-coordinate dependence probe
  for (const auto& p : pts) {
    Jet j = s.f_jet_xy(p, 1);
    for (int i = 0; i <= s.n; ++i)
      if (std::abs(j.partial(MultiIndex::unit(2 * s.n, i))) > 1e-10) iso = false;
  }

  std::vector<CPoint> starts = sample_points(s, trajectories, rng, 0.35);
  std::vector<GeodesicJob> jobs;
  for (const auto& p : starts) {
    GeodesicJob j;
    j.start = p;
    j.t0 = 0.0;
    j.t1 = tmax;
    j.tol = tol;
    j.nsamples = 601;
    jobs.push_back(j);
  }
  std::vector<GeodesicRun> runs = run_geodesics_parallel(s, jobs);

  double max_wsf = 0.0, max_raych = 0.0, max_tidal = 0.0;
  double pnn_min = 0.0, pnn_max = 0.0;
  bool any_valid = false;
  // skip the early window where B ~ I/(t - t0) dominates the stencils
  double t_cut = 0.2 * tmax;
  for (const auto& run : runs)
    for (const auto& o : run.optics) {
      if (!o.valid || o.t - run.traj.t0 < t_cut) continue;
      max_tidal = std::max(max_tidal, o.tidal.frobenius());
      if (!any_valid) {
        pnn_min = pnn_max = o.pnn;
        any_valid = true;
      }
      max_wsf = std::max(max_wsf, o.wsf_norm);
      max_raych = std::max(max_raych, std::abs(o.raych_residual));
      pnn_min = std::min(pnn_min, o.pnn);
      pnn_max = std::max(pnn_max, o.pnn);
    }

  bool fubini_zero = max_fub < zscale;
  bool ruled_plus = with_split && max_fp < zscale;
  bool ruled_minus = with_split && max_fm < zscale;
  // scale-aware: second-order frame effects leave a residue proportional to
  // the overall tidal magnitude
  bool tidal_zero = max_wsf < std::max(1e-6, 1e-3 * max_tidal);
  const double pnn_thr = 1e-6;
  std::string ssf;
  if (!any_valid)
    ssf = "unknown";
  else if (pnn_min > -pnn_thr && pnn_max < pnn_thr)
    ssf = "zero";
  else if (pnn_min > -pnn_thr)
    ssf = "positive";
  else if (pnn_max < pnn_thr)
    ssf = "negative";
  else
    ssf = "indefinite";

  std::string mode = fubini_zero ? "conformal" : (iso ? "isotrivial" : "proxy");

  std::ostringstream os;
  os << "{\n";
  os << "  \"structure\": \"" << s.name << "\",\n";
  os << "  \"samples\": " << samples << ",\n";
  os << "  \"trajectories\": " << trajectories << ",\n";
  os << "  \"seed\": " << seed << ",\n";
  os << "  \"fubini_zero\": " << (fubini_zero ? "true" : "false") << ",\n";
  if (with_split) {
    os << "  \"ruled_plus\": " << (ruled_plus ? "true" : "false") << ",\n";
    os << "  \"ruled_minus\": " << (ruled_minus ? "true" : "false") << ",\n";
  } else {
    os << "  \"ruled_plus\": null,\n  \"ruled_minus\": null,\n";
  }
  os << "  \"tidal_tracefree_zero\": " << (tidal_zero ? "true" : "false") << ",\n";
  os << "  \"ssf_sign_profile\": \"" << ssf << "\",\n";
  os << "  \"halfflat\": {\"plus\": " << ((ruled_plus && tidal_zero) ? "true" : "false")
     << ", \"minus\": " << ((ruled_minus && tidal_zero) ? "true" : "false")
     << ", \"verdict_mode\": \"" << mode << "\"},\n";
  os << "  \"residuals\": {\"max_fubini_norm\": " << format_double(max_fub)
     << ", \"max_fplus\": " << format_double(max_fp)
     << ", \"max_fminus\": " << format_double(max_fm)
     << ", \"max_apolarity\": " << format_double(max_apol)
     << ", \"max_wsf_norm\": " << format_double(max_wsf)
     << ", \"max_raych_residual\": " << format_double(max_raych)
     << ", \"pnn_min\": " << format_double(any_valid ? pnn_min : 0.0)
     << ", \"pnn_max\": " << format_double(any_valid ? pnn_max : 0.0) << "}\n";
  os << "}\n";
  write_out(out, os.str());
  return 0;
}

int cmd_catalog(const std::string& action, const std::string& name) {
  if (action == "list") {
    for (const auto& e : catalog_entries())
      std::cout << e.name << "  [" << e.kind << "]  " << e.summary << "\n";
    return 0;
  }
  if (action == "show") {
    const CatalogEntry* e = catalog_find(name);
    if (!e) {
      std::cerr << "unknown catalog entry '" << name << "'\n";
      return 2;
    }
    std::cout << "name: " << e->name << "\nkind: " << e->kind
              << "\nsummary: " << e->summary << "\n";
    if (e->structure) {
      CausalStructure s = e->structure();
      std::cout << "dim: " << s.dim() << "\nsignature: " << s.signature.first << ","
                << s.signature.second << "\n";
      if (auto* ad = dynamic_cast<const AstDefining*>(s.defining.get()))
        std::cout << "F: " << to_string(ad->ast()) << "\n";
    }
    std::cout << "expected:\n";
    for (const auto& [flag, why] : e->expected)
      std::cout << "  " << flag << "  (" << why << ")\n";
    return 0;
  }
  std::cerr << "catalog action must be list or show\n";
  return 2;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"causalgeo: local invariants and characteristic flow of causal structures"};
  app.require_subcommand(1);

  // invariants
  auto* inv = app.add_subcommand("invariants", "pointwise invariant reports");
  std::string inv_structure, inv_at, inv_out = "-", inv_format = "csv";
  int inv_samples = 10;
  std::uint64_t inv_seed = 1;
  double inv_box = 0.5;
  inv->add_option("--structure", inv_structure, "catalog name or structure file")
      ->required();
  inv->add_option("--at", inv_at, "single point \"x0,..,xn;y1,..\"");
  inv->add_option("--samples", inv_samples, "number of random points");
  inv->add_option("--seed", inv_seed, "RNG seed");
  inv->add_option("--box", inv_box, "half-width of the sample box");
  inv->add_option("--out", inv_out, "output path (- for stdout)");
  inv->add_option("--format", inv_format, "csv or json");

  // geodesic
  auto* geo = app.add_subcommand("geodesic", "characteristic curve with optical scalars");
  std::string geo_structure, geo_from, geo_out = "-";
  double geo_tmax = 2.0, geo_tol = 1e-9, geo_excl = 10.0;
  int geo_samples = 801;
  geo->add_option("--structure", geo_structure)->required();
  geo->add_option("--from", geo_from, "start point \"x0,..,xn;y1,..\"")->required();
  geo->add_option("--tmax", geo_tmax, "integration span");
  geo->add_option("--tol", geo_tol, "relative tolerance");
  geo->add_option("--samples", geo_samples, "output rows");
  geo->add_option("--exclusion", geo_excl, "t0 window, in mean steps");
  geo->add_option("--out", geo_out);

  // classify
  auto* cls = app.add_subcommand("classify", "flag verdicts over random samples");
  std::string cls_structure, cls_out = "-";
  int cls_samples = 25, cls_traj = 5;
  std::uint64_t cls_seed = 1;
  double cls_tmax = 1.5, cls_tol = 1e-9;
  cls->add_option("--structure", cls_structure)->required();
  cls->add_option("--samples", cls_samples);
  cls->add_option("--trajectories", cls_traj);
  cls->add_option("--seed", cls_seed);
  cls->add_option("--tmax", cls_tmax);
  cls->add_option("--tol", cls_tol);
  cls->add_option("--out", cls_out);

  // catalog
  auto* cat = app.add_subcommand("catalog", "list built-in structures and metrics");
  std::string cat_action, cat_name;
  cat->add_option("action", cat_action, "list or show")->required();
  cat->add_option("name", cat_name, "entry name");

  std::vector<const char*> argv;
  argv.push_back("causalgeo");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (inv->parsed())
      return cmd_invariants(inv_structure, inv_at, inv_samples, inv_seed, inv_box,
                            inv_out, inv_format);
    if (geo->parsed())
      return cmd_geodesic(geo_structure, geo_from, geo_tmax, geo_tol, geo_samples,
                          geo_excl, geo_out);
    if (cls->parsed())
      return cmd_classify(cls_structure, cls_samples, cls_traj, cls_seed, cls_tmax,
                          cls_tol, cls_out);
    if (cat->parsed()) return cmd_catalog(cat_action, cat_name);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    if (is_config_error(e)) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
    std::cerr << "geometric error [" << error_kind_name(e.kind()) << "]: " << e.what()
              << "\n";
    return 3;
  }
  return 2;
}

}  // namespace causalgeo
