#ifndef WARPLOSS_LANDSCAPE_HPP_
#define WARPLOSS_LANDSCAPE_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "warploss/loss.hpp"

namespace warploss {

struct GridSpec {
  double x_min = -1.0, x_max = 1.0;
  double y_min = -1.0, y_max = 1.0;
  int resolution = 256;  // points per axis

  void validate() const;
  double dx() const { return (x_max - x_min) / (resolution - 1); }
  double dy() const { return (y_max - y_min) / (resolution - 1); }
  double cell_diagonal() const;
};

struct GridPoint {
  int ix = 0, iy = 0;
  double x = 0.0, y = 0.0;
  double value = 0.0;
};

// Dense 2-D evaluation with detected interior extrema. Extrema use strict
// 8-neighbor comparison: a cell equal to any neighbor is suppressed, so the
// vanilla landscape's outward plateau never registers as a minimum.
struct LandscapeGrid {
  GridSpec spec;
  std::vector<double> values;  // row-major, y outer, x inner
  std::vector<GridPoint> minima;
  std::vector<GridPoint> maxima;

  double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * spec.resolution + ix]; }
  double x_of(int ix) const { return spec.x_min + ix * spec.dx(); }
  double y_of(int iy) const { return spec.y_min + iy * spec.dy(); }
};

struct OffLineExtremum {
  Vec point;
  double perpendicular_distance = 0.0;
  std::string source;  // "grid" or "disk"
};

struct LineExtremaReport {
  bool warp_monotone = true;
  std::vector<OffLineExtremum> off_line_extrema;
  bool pass = false;
};

struct ReversalReport {
  double argmin_t = 0.0;
  double expected_alpha = 0.0;
  double step = 0.0;
  double slope_before = 0.0;  // one-sided FD slope at alpha - 0.1
  double slope_after = 0.0;   // one-sided FD slope at alpha + 0.1
  bool pass = false;
};

// Grid of binary_loss values; proxies must be 2-D.
LandscapeGrid evaluate_grid(const ProxyPair& pair, const LossConfig& cfg, const GridSpec& spec);

// Same machinery for an arbitrary scalar field (used by the extrema verifier
// to admit non-monotone warp functions WarpSpec rejects).
LandscapeGrid evaluate_grid_fn(const std::function<double(double, double)>& f,
                               const GridSpec& spec);

// Loss sampled at e = p_c + t * direction, t equally spaced over the range.
std::vector<std::pair<double, double>> evaluate_along_line(const ProxyPair& pair,
                                                           const LossConfig& cfg, double t_min,
                                                           double t_max, int n_points);

// Checks the on-line-extrema claim for the single-warp loss
// log(1 + exp(f(t1) - f(t2))): every interior grid extremum must lie within
// one cell diagonal of the proxy line, and on each of 8 random disks around
// p_cprime the sampled minimizer/maximizer must coincide with the near/far
// line intersections e_* and e^* (720 angles, tolerance 2 samples).
LineExtremaReport verify_line_extrema(const std::function<double(double)>& f,
                                      const ProxyPair& pair, const GridSpec& spec,
                                      std::uint64_t seed = 0);
LineExtremaReport verify_line_extrema(const WarpSpec& warp, const ProxyPair& pair,
                                      const GridSpec& spec, std::uint64_t seed = 0);

// Brute-force check that the split warp places the 1-D minimum at alpha:
// scans t in [0, alpha + 3d] at step <= alpha/1000 and requires
// |argmin - alpha| <= 2 steps. f1 must be piecewise-linear, f2 identity.
ReversalReport verify_reversal_minimum(const WarpPair& warp, const ProxyPair& pair);

// CSV with header "x,y,loss", rows y-outer/x-inner, 17 significant digits.
void export_grid(const LandscapeGrid& grid, const std::string& path);
LandscapeGrid import_grid(const std::string& path);

}  // namespace warploss

#endif  // WARPLOSS_LANDSCAPE_HPP_
