#ifndef CLIPTRAP_DATASET_HPP
#define CLIPTRAP_DATASET_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cliptrap/errors.hpp"

namespace cliptrap {

// (x, y, sigma_y) samples with unit-annotated axis labels, e.g. "t_s".
struct DataSet {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> sigma;
  std::string x_label = "x";
  std::string y_label = "y";

  std::size_t size() const { return x.size(); }
  bool empty() const { return x.empty(); }

  void add(double xv, double yv, double sv = 1.0) {
    x.push_back(xv);
    y.push_back(yv);
    sigma.push_back(sv);
  }

  void validate(std::size_t min_points, const std::string& what) const {
    detail::require(x.size() == y.size() && x.size() == sigma.size(), what + ": column lengths differ");
    if (x.size() < min_points) {
      throw InputError(what + ": need at least " + std::to_string(min_points) + " data rows, got " +
                       std::to_string(x.size()));
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      detail::require(std::isfinite(x[i]) && std::isfinite(y[i]), what + ": non-finite value in row " + std::to_string(i));
      detail::require(sigma[i] > 0.0 && std::isfinite(sigma[i]), what + ": sigma must be > 0 in row " + std::to_string(i));
    }
  }

  // Rows where keep[i] is true.
  DataSet select(const std::vector<bool>& keep) const {
    detail::require(keep.size() == size(), "DataSet::select: mask length differs");
    DataSet out;
    out.x_label = x_label;
    out.y_label = y_label;
    for (std::size_t i = 0; i < size(); ++i) {
      if (keep[i]) out.add(x[i], y[i], sigma[i]);
    }
    return out;
  }
};

// Column-density image sampled on a (y, z) grid, flattened row by row.
struct ColumnImage {
  std::vector<double> y;      // m
  std::vector<double> z;      // m
  std::vector<double> value;  // 1/m^2
  std::vector<double> sigma;  // 1/m^2

  std::size_t size() const { return value.size(); }

  void add(double yv, double zv, double v, double s = 1.0) {
    y.push_back(yv);
    z.push_back(zv);
    value.push_back(v);
    sigma.push_back(s);
  }
};

}  // namespace cliptrap

#endif
