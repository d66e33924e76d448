#include "reachnet/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "reachnet/common.hpp"

namespace reachnet {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double local_l1_error(const std::vector<double>& v, const std::vector<double>& v_ref,
                      double eta_loc) {
  if (v.size() != v_ref.size()) throw ConfigError("local_l1_error: size mismatch");
  double acc = 0.0;
  long count = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::fabs(v_ref[i]) <= eta_loc) {
      acc += std::fabs(v[i] - v_ref[i]);
      ++count;
    }
  }
  if (count == 0) throw NumericError("local_l1_error: empty band around the zero level set");
  return acc / (double)count;
}

ErrorReport error_report(const std::vector<double>& v, const std::vector<double>& v_ref,
                         double eta_loc) {
  ErrorReport rep;
  rep.eta_loc = eta_loc;
  rep.l1_loc = local_l1_error(v, v_ref, eta_loc);
  double acc = 0.0;
  long agree = 0, band = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    acc += std::fabs(v[i] - v_ref[i]);
    const int sa = v[i] < 0.0 ? -1 : 1;
    const int sb = v_ref[i] < 0.0 ? -1 : 1;
    if (sa == sb) ++agree;
    if (std::fabs(v_ref[i]) <= eta_loc) ++band;
  }
  rep.l1_global = acc / (double)v.size();
  rep.sign_agreement = (double)agree / (double)v.size();
  rep.band_count = (int)band;
  return rep;
}

std::vector<double> convergence_order(const std::vector<double>& errors) {
  std::vector<double> orders;
  for (double e : errors)
    if (!(e > 0.0)) throw NumericError("convergence_order: errors must be positive");
  for (std::size_t i = 0; i + 1 < errors.size(); ++i)
    orders.push_back(std::log2(errors[i] / errors[i + 1]));
  return orders;
}

LevelSetGrid level_set_grid(const std::function<double(const double*)>& fn,
                            const std::vector<double>& lo2, const std::vector<double>& hi2,
                            const std::vector<int>& res2, const std::vector<double>& slice,
                            int axis0, int axis1) {
  if (res2.size() != 2 || res2[0] < 2 || res2[1] < 2)
    throw ConfigError("level_set_grid: need a 2-D grid with res >= 2 per axis");
  LevelSetGrid out;
  out.values.lo = lo2;
  out.values.hi = hi2;
  out.values.res = res2;
  out.values.allocate();
  std::vector<double> x = slice.empty() ? std::vector<double>(2, 0.0) : slice;
  std::size_t flat = 0;
  for (int i = 0; i < res2[0]; ++i) {
    const double x0 = lo2[0] + (hi2[0] - lo2[0]) * i / (res2[0] - 1);
    for (int j = 0; j < res2[1]; ++j, ++flat) {
      const double x1 = lo2[1] + (hi2[1] - lo2[1]) * j / (res2[1] - 1);
      x[(std::size_t)axis0] = x0;
      x[(std::size_t)axis1] = x1;
      out.values.data[flat] = fn(x.data());
    }
  }
  out.signs.resize(out.values.data.size());
  for (std::size_t k = 0; k < out.signs.size(); ++k)
    out.signs[k] = out.values.data[k] < 0.0 ? -1 : 1;
  return out;
}

void write_grid_csv(std::ostream& os, const GridValue& g) {
  os << "box";
  for (int ax = 0; ax < g.dim(); ++ax)
    os << ',' << format_double(g.lo[(std::size_t)ax]) << ',' << format_double(g.hi[(std::size_t)ax])
       << ',' << g.res[(std::size_t)ax];
  os << '\n';
  const int last = g.res.back();
  for (std::size_t k = 0; k < g.data.size(); ++k) {
    os << format_double(g.data[k]);
    os << (((int)(k % (std::size_t)last) == last - 1) ? '\n' : ',');
  }
}

GridValue read_grid_csv(std::istream& is) {
  GridValue g;
  std::string line;
  if (!std::getline(is, line)) throw ArtifactError("grid csv: empty file");
  std::stringstream hs(line);
  std::string tok;
  std::getline(hs, tok, ',');
  if (tok != "box") throw ArtifactError("grid csv: missing box header");
  while (std::getline(hs, tok, ',')) {
    const double lo = std::stod(tok);
    if (!std::getline(hs, tok, ',')) throw ArtifactError("grid csv: truncated header");
    const double hi = std::stod(tok);
    if (!std::getline(hs, tok, ',')) throw ArtifactError("grid csv: truncated header");
    const int res = std::stoi(tok);
    g.lo.push_back(lo);
    g.hi.push_back(hi);
    g.res.push_back(res);
  }
  g.allocate();
  std::size_t k = 0;
  while (std::getline(is, line)) {
    std::stringstream ls(line);
    while (std::getline(ls, tok, ',')) {
      if (k >= g.data.size()) throw ArtifactError("grid csv: too many values");
      g.data[k++] = std::stod(tok);
    }
  }
  if (k != g.data.size()) throw ArtifactError("grid csv: value count mismatch");
  return g;
}

void write_sign_csv(std::ostream& os, const GridValue& box, const std::vector<int>& signs) {
  os << "box";
  for (int ax = 0; ax < box.dim(); ++ax)
    os << ',' << format_double(box.lo[(std::size_t)ax]) << ','
       << format_double(box.hi[(std::size_t)ax]) << ',' << box.res[(std::size_t)ax];
  os << '\n';
  const int last = box.res.back();
  for (std::size_t k = 0; k < signs.size(); ++k) {
    os << signs[k];
    os << (((int)(k % (std::size_t)last) == last - 1) ? '\n' : ',');
  }
}

void write_grid_csv_file(const std::string& path, const GridValue& g) {
  std::ofstream os(path);
  if (!os) throw ArtifactError("cannot open for writing: " + path);
  write_grid_csv(os, g);
}

GridValue read_grid_csv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ArtifactError("cannot open: " + path);
  return read_grid_csv(is);
}

}  // namespace reachnet
