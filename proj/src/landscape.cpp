#include "warploss/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "warploss/rng.hpp"

namespace warploss {

namespace {

double softplus(double z) {
  if (z <= 0.0) return std::log1p(std::exp(z));
  return z + std::log1p(std::exp(-z));
}

void require_2d(const ProxyPair& pair, const char* what) {
  if (pair.p_c.size() != 2)
    throw std::invalid_argument(std::string(what) + ": proxies must be 2-D");
}

void detect_extrema(LandscapeGrid& grid) {
  const int res = grid.spec.resolution;
  for (int iy = 1; iy + 1 < res; ++iy) {
    for (int ix = 1; ix + 1 < res; ++ix) {
      const double v = grid.at(ix, iy);
      bool below_all = true, above_all = true;
      for (int dy = -1; dy <= 1 && (below_all || above_all); ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const double nv = grid.at(ix + dx, iy + dy);
          if (v >= nv) below_all = false;
          if (v <= nv) above_all = false;
        }
      }
      if (below_all || above_all) {
        GridPoint p{ix, iy, grid.x_of(ix), grid.y_of(iy), v};
        (below_all ? grid.minima : grid.maxima).push_back(p);
      }
    }
  }
}

}  // namespace

void GridSpec::validate() const {
  if (!(x_max > x_min) || !(y_max > y_min))
    throw std::invalid_argument("GridSpec: degenerate range");
  if (resolution < 16 || resolution > 4096)
    throw std::invalid_argument("GridSpec: resolution must be in [16, 4096]");
}

double GridSpec::cell_diagonal() const { return std::hypot(dx(), dy()); }

LandscapeGrid evaluate_grid_fn(const std::function<double(double, double)>& f,
                               const GridSpec& spec) {
  spec.validate();
  LandscapeGrid grid;
  grid.spec = spec;
  const int res = spec.resolution;
  grid.values.resize(static_cast<std::size_t>(res) * res);
  for (int iy = 0; iy < res; ++iy) {
    const double y = grid.y_of(iy);
    for (int ix = 0; ix < res; ++ix)
      grid.values[static_cast<std::size_t>(iy) * res + ix] = f(grid.x_of(ix), y);
  }
  detect_extrema(grid);
  return grid;
}

LandscapeGrid evaluate_grid(const ProxyPair& pair, const LossConfig& cfg, const GridSpec& spec) {
  require_2d(pair, "evaluate_grid");
  return evaluate_grid_fn(
      [&](double x, double y) { return binary_loss(Vec{x, y}, pair, cfg); }, spec);
}

std::vector<std::pair<double, double>> evaluate_along_line(const ProxyPair& pair,
                                                           const LossConfig& cfg, double t_min,
                                                           double t_max, int n_points) {
  if (n_points < 2) throw std::invalid_argument("evaluate_along_line: need at least 2 points");
  const LineParam line = line_through(pair);
  std::vector<std::pair<double, double>> out;
  out.reserve(n_points);
  const double step = (t_max - t_min) / (n_points - 1);
  for (int i = 0; i < n_points; ++i) {
    const double t = t_min + i * step;
    out.emplace_back(t, binary_loss(line.point_at(t), pair, cfg));
  }
  return out;
}

LineExtremaReport verify_line_extrema(const std::function<double(double)>& f,
                                      const ProxyPair& pair, const GridSpec& spec,
                                      std::uint64_t seed) {
  require_2d(pair, "verify_line_extrema");
  LineExtremaReport report;
  const LineParam line = line_through(pair);
  const double d = pair.separation();

  // Numerical monotonicity probe over the distance range the grid can reach.
  const double t_reach = 2.0 * (std::hypot(spec.x_max - spec.x_min, spec.y_max - spec.y_min) + d);
  double prev = f(0.0);
  for (int i = 1; i <= 4096; ++i) {
    const double cur = f(t_reach * i / 4096.0);
    if (cur < prev - 1e-12) {
      report.warp_monotone = false;
      break;
    }
    prev = cur;
  }

  const auto loss_at = [&](const Vec& e) {
    return softplus(f(distance(e, pair.p_c)) - f(distance(e, pair.p_cprime)));
  };

  // Grid extrema must hug the proxy line.
  LandscapeGrid grid =
      evaluate_grid_fn([&](double x, double y) { return loss_at(Vec{x, y}); }, spec);
  const double cell = spec.cell_diagonal();
  for (const auto& list : {grid.minima, grid.maxima}) {
    for (const GridPoint& p : list) {
      const double perp = point_line_distance(Vec{p.x, p.y}, line);
      if (perp > cell) report.off_line_extrema.push_back({Vec{p.x, p.y}, perp, "grid"});
    }
  }

  // Disk form: restricted to a sphere around p_cprime the loss must be
  // minimized at e_* and maximized at e^*.
  constexpr int kAngles = 720;
  constexpr int kAngleTol = 2;
  Rng rng(derive_seed(seed, RngStream::kVerify));
  for (int trial = 0; trial < 8; ++trial) {
    const double r = rng.uniform(0.05 * d, 2.0 * d);
    int best_min = 0, best_max = 0;
    double vmin = 0.0, vmax = 0.0;
    std::vector<Vec> pts(kAngles);
    // Angle 0 points from p_cprime toward p_c, so e_* is sample 0 and e^*
    // sample kAngles/2. Basis: line direction and any perpendicular.
    Vec u = line.direction;
    Vec v(2);
    v[0] = -u[1];
    v[1] = u[0];
    for (int a = 0; a < kAngles; ++a) {
      const double th = 2.0 * 3.14159265358979323846 * a / kAngles;
      Vec e = pair.p_cprime;
      axpy(r * std::cos(th), u, e);
      axpy(r * std::sin(th), v, e);
      const double val = loss_at(e);
      pts[a] = std::move(e);
      if (a == 0 || val < vmin) {
        vmin = val;
        best_min = a;
      }
      if (a == 0 || val > vmax) {
        vmax = val;
        best_max = a;
      }
    }
    const auto angle_gap = [](int a, int target) {
      int g = std::abs(a - target) % kAngles;
      return std::min(g, kAngles - g);
    };
    if (angle_gap(best_min, 0) > kAngleTol)
      report.off_line_extrema.push_back(
          {pts[best_min], point_line_distance(pts[best_min], line), "disk"});
    if (angle_gap(best_max, kAngles / 2) > kAngleTol)
      report.off_line_extrema.push_back(
          {pts[best_max], point_line_distance(pts[best_max], line), "disk"});
  }

  report.pass = report.off_line_extrema.empty();
  return report;
}

LineExtremaReport verify_line_extrema(const WarpSpec& warp, const ProxyPair& pair,
                                      const GridSpec& spec, std::uint64_t seed) {
  return verify_line_extrema([&warp](double t) { return warp.value(t); }, pair, spec, seed);
}

ReversalReport verify_reversal_minimum(const WarpPair& warp, const ProxyPair& pair) {
  if (warp.f1.kind() != WarpSpec::Kind::kPiecewiseLinear)
    throw std::invalid_argument("verify_reversal_minimum: f1 must be piecewise-linear");
  if (warp.f2.kind() != WarpSpec::Kind::kIdentity)
    throw std::invalid_argument("verify_reversal_minimum: f2 must be the identity");

  ReversalReport report;
  report.expected_alpha = warp.f1.alpha();
  const double d = pair.separation();
  const double t_max = report.expected_alpha + 3.0 * d;
  report.step = report.expected_alpha / 1000.0;
  const int n = static_cast<int>(std::ceil(t_max / report.step)) + 1;

  const LossConfig cfg{warp, 1.0, true};
  const LineParam line = line_through(pair);
  double best_v = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = std::min(i * report.step, t_max);
    const double v = binary_loss(line.point_at(t), pair, cfg);
    if (i == 0 || v < best_v) {
      best_v = v;
      report.argmin_t = t;
    }
  }
  report.pass = std::abs(report.argmin_t - report.expected_alpha) <= 2.0 * report.step;

  const auto loss_at_t = [&](double t) { return binary_loss(line.point_at(t), pair, cfg); };
  const double h = 0.01;
  report.slope_before =
      (loss_at_t(report.expected_alpha - 0.1 + h) - loss_at_t(report.expected_alpha - 0.1)) / h;
  report.slope_after =
      (loss_at_t(report.expected_alpha + 0.1 + h) - loss_at_t(report.expected_alpha + 0.1)) / h;
  return report;
}

void export_grid(const LandscapeGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_grid: cannot open " + path);
  out << "x,y,loss\n";
  char buf[96];
  const int res = grid.spec.resolution;
  for (int iy = 0; iy < res; ++iy) {
    for (int ix = 0; ix < res; ++ix) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", grid.x_of(ix), grid.y_of(iy),
                    grid.at(ix, iy));
      out << buf;
    }
  }
  if (!out) throw std::runtime_error("export_grid: write failed for " + path);
}

LandscapeGrid import_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("import_grid: cannot open " + path);
  std::string header;
  std::getline(in, header);
  if (header != "x,y,loss") throw std::runtime_error("import_grid: bad header in " + path);

  std::vector<double> xs, ys, vs;
  std::string lineb;
  while (std::getline(in, lineb)) {
    if (lineb.empty()) continue;
    double x, y, v;
    if (std::sscanf(lineb.c_str(), "%lf,%lf,%lf", &x, &y, &v) != 3)
      throw std::runtime_error("import_grid: malformed row '" + lineb + "'");
    xs.push_back(x);
    ys.push_back(y);
    vs.push_back(v);
  }
  const std::size_t total = vs.size();
  const int res = static_cast<int>(std::lround(std::sqrt(static_cast<double>(total))));
  if (static_cast<std::size_t>(res) * res != total)
    throw std::runtime_error("import_grid: row count is not a perfect square");

  LandscapeGrid grid;
  grid.spec.resolution = res;
  grid.spec.x_min = xs.front();
  grid.spec.x_max = xs[res - 1];
  grid.spec.y_min = ys.front();
  grid.spec.y_max = ys.back();
  grid.values = std::move(vs);
  detect_extrema(grid);
  return grid;
}

}  // namespace warploss
