#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "reachnet/oracle.hpp"

namespace reachnet {

struct ErrorReport {
  double l1_loc = 0.0;          // mean |V - v_ref| over the band |v_ref| <= eta_loc
  double l1_global = 0.0;       // mean |V - v_ref| over all nodes
  double sign_agreement = 0.0;  // fraction of nodes with matching sign
  int band_count = 0;
  double eta_loc = 0.2;
};

// Both samplings must share the same grid. Throws NumericError when the band
// {|v_ref| <= eta_loc} is empty.
double local_l1_error(const std::vector<double>& v, const std::vector<double>& v_ref,
                      double eta_loc = 0.2);

ErrorReport error_report(const std::vector<double>& v, const std::vector<double>& v_ref,
                         double eta_loc = 0.2);

// order_k = log2(e_N / e_2N) for a doubling sequence of N. Throws NumericError
// on nonpositive errors; a single entry yields an empty list.
std::vector<double> convergence_order(const std::vector<double>& errors);

struct LevelSetGrid {
  GridValue values;
  std::vector<int> signs;  // sign(value); 0.0 counts as non-negative (+1)
};

// Samples fn over a 2-D grid. For higher-dimensional states, `slice` holds
// the full-dimensional template whose axes (axis0, axis1) are swept.
LevelSetGrid level_set_grid(const std::function<double(const double*)>& fn,
                            const std::vector<double>& lo2, const std::vector<double>& hi2,
                            const std::vector<int>& res2, const std::vector<double>& slice = {},
                            int axis0 = 0, int axis1 = 1);

// CSV layout: one "box,lo,hi,res,..." metadata line, then row-major values
// with 17 significant digits.
void write_grid_csv(std::ostream& os, const GridValue& g);
GridValue read_grid_csv(std::istream& is);
void write_sign_csv(std::ostream& os, const GridValue& box, const std::vector<int>& signs);

void write_grid_csv_file(const std::string& path, const GridValue& g);
GridValue read_grid_csv_file(const std::string& path);

std::string format_double(double v);  // %.17g

}  // namespace reachnet
