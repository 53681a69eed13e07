#include "causalgeo/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "causalgeo/catalog.hpp"
#include "causalgeo/errors.hpp"

namespace causalgeo {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

StructureFile parse_structure_file(const std::string& text, const std::string& name) {
  StructureFile sf;
  sf.name = name;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::BadInput,
                  "structure file line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key == "dim") {
      sf.dim = std::stoi(val);
    } else if (key == "signature") {
      std::size_t comma = val.find(',');
      if (comma == std::string::npos)
        throw Error(ErrorKind::BadInput, "signature expects p,q");
      sf.signature = {std::stoi(trim(val.substr(0, comma))),
                      std::stoi(trim(val.substr(comma + 1)))};
    } else if (key.rfind("const ", 0) == 0) {
      std::string cname = trim(key.substr(6));
      sf.consts[cname] = std::stod(val);
    } else if (key == "F") {
      if (sf.f_expr || !sf.metric_entries.empty())
        throw Error(ErrorKind::BadInput, "exactly one of F or metric entries allowed");
      sf.f_expr = val;
    } else if (key.size() == 3 && key[0] == 'g' &&
               std::isdigit(static_cast<unsigned char>(key[1])) &&
               std::isdigit(static_cast<unsigned char>(key[2]))) {
      if (sf.f_expr)
        throw Error(ErrorKind::BadInput, "exactly one of F or metric entries allowed");
      sf.metric_entries[key] = val;
    } else {
      throw Error(ErrorKind::BadInput,
                  "structure file line " + std::to_string(lineno) + ": unknown key '" +
                      key + "'");
    }
  }
  if (sf.dim < 4) throw Error(ErrorKind::BadInput, "dim must be at least 4");
  if (sf.signature.first + sf.signature.second != sf.dim - 2)
    throw Error(ErrorKind::BadInput, "signature must sum to dim - 2");
  if (!sf.f_expr && sf.metric_entries.empty())
    throw Error(ErrorKind::BadInput, "missing F or metric entries");
  return sf;
}

namespace {

bool looks_like_path(const std::string& s) {
  return s.find('/') != std::string::npos || s.find('.') != std::string::npos;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::BadInput, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string base_name(const std::string& path) {
  std::size_t slash = path.find_last_of('/');
  std::string b = slash == std::string::npos ? path : path.substr(slash + 1);
  std::size_t dot = b.find_last_of('.');
  return dot == std::string::npos ? b : b.substr(0, dot);
}

}  // namespace

CausalStructure load_structure(const std::string& name_or_path) {
  if (catalog_find(name_or_path)) return catalog_structure(name_or_path);
  if (!looks_like_path(name_or_path))
    throw Error(ErrorKind::BadInput, "unknown structure '" + name_or_path + "'");
  StructureFile sf = parse_structure_file(read_file(name_or_path), base_name(name_or_path));
  int n = sf.dim - 1;
  if (sf.f_expr)
    return make_structure(n, sf.signature, parse(*sf.f_expr), sf.consts, sf.name);
  Metric m = metric_from_entries(sf.dim, {sf.signature.first + 1, sf.signature.second + 1},
                                 sf.metric_entries, sf.consts, sf.name);
  return graph_from_metric(m, sf.name);
}

std::optional<Metric> load_metric_if_any(const std::string& name_or_path) {
  if (const CatalogEntry* e = catalog_find(name_or_path)) {
    if (e->metric) return e->metric();
    return std::nullopt;
  }
  if (!looks_like_path(name_or_path)) return std::nullopt;
  StructureFile sf = parse_structure_file(read_file(name_or_path), base_name(name_or_path));
  if (sf.metric_entries.empty()) return std::nullopt;
  return metric_from_entries(sf.dim, {sf.signature.first + 1, sf.signature.second + 1},
                             sf.metric_entries, sf.consts, sf.name);
}

CPoint parse_point(const std::string& text, int n) {
  std::size_t semi = text.find(';');
  if (semi == std::string::npos)
    throw Error(ErrorKind::BadInput, "point must be \"x0,..,xn;y1,..,y" +
                                         std::to_string(n - 1) + "\"");
  auto parse_list = [&](const std::string& part, std::size_t want,
                        const char* which) {
    std::vector<double> out;
    std::istringstream in(part);
    std::string item;
    while (std::getline(in, item, ',')) {
      std::string t = trim(item);
      if (t.empty()) throw Error(ErrorKind::BadInput, "empty coordinate in point");
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(t, &used);
      } catch (const std::exception&) {
        throw Error(ErrorKind::BadInput, std::string("bad ") + which +
                                             " coordinate '" + t + "'");
      }
      if (used != t.size())
        throw Error(ErrorKind::BadInput, std::string("bad ") + which +
                                             " coordinate '" + t + "'");
      out.push_back(v);
    }
    if (out.size() != want)
      throw Error(ErrorKind::BadInput, std::string("expected ") + std::to_string(want) +
                                           " " + which + " coordinates, got " +
                                           std::to_string(out.size()));
    return out;
  };
  CPoint p;
  p.x = parse_list(text.substr(0, semi), static_cast<std::size_t>(n + 1), "base");
  p.y = parse_list(text.substr(semi + 1), static_cast<std::size_t>(n - 1), "fiber");
  return p;
}

std::uint64_t Rng::next() {
  state_ += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::vector<CPoint> sample_points(const CausalStructure& s, int count, Rng& rng,
                                  double box, int max_rejects) {
  std::vector<CPoint> pts;
  int rejects = 0;
  while (static_cast<int>(pts.size()) < count) {
    CPoint p;
    p.x.resize(static_cast<std::size_t>(s.n + 1));
    p.y.resize(static_cast<std::size_t>(s.n - 1));
    for (auto& v : p.x) v = rng.uniform(-box, box);
    for (auto& v : p.y) v = rng.uniform(-box, box);
    try {
      vertical_hessian(s, p);
    } catch (const Error&) {
      if (++rejects > max_rejects)
        throw Error(ErrorKind::BadInput,
                    "too many rejected sample points (" + std::to_string(max_rejects) + ")");
      continue;
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace causalgeo
