#include "sescc/greens_types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sescc {

FrequencyGrid FrequencyGrid::uniform(double lo, double hi, double step, double eta) {
  if (!(step > 0.0) || !(hi >= lo)) throw std::domain_error("invalid frequency range");
  FrequencyGrid g;
  g.eta = eta;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5)) + 1;
  g.omegas.reserve(n);
  for (std::size_t i = 0; i < n; ++i) g.omegas.push_back(lo + static_cast<double>(i) * step);
  g.validate();
  return g;
}

void FrequencyGrid::validate() const {
  if (!(eta > 0.0)) throw std::domain_error("broadening eta must be positive");
  if (omegas.empty()) throw std::domain_error("frequency grid is empty");
  for (std::size_t i = 1; i < omegas.size(); ++i)
    if (!(omegas[i] > omegas[i - 1])) throw std::domain_error("frequency grid must be ascending");
}

std::vector<Pole> consolidate_poles(std::vector<Pole> poles, double merge_tol, double drop_tol) {
  std::sort(poles.begin(), poles.end(),
            [](const Pole& a, const Pole& b) { return a.position < b.position; });
  std::vector<Pole> merged;
  for (const auto& p : poles) {
    if (!merged.empty() && std::abs(p.position - merged.back().position) < merge_tol) {
      auto& m = merged.back();
      const double w = m.weight + p.weight;
      if (std::abs(w) > 0) m.position = (m.position * m.weight + p.position * p.weight) / w;
      m.weight = w;
    } else {
      merged.push_back(p);
    }
  }
  std::vector<Pole> out;
  for (const auto& p : merged)
    if (std::abs(p.weight) >= drop_tol) out.push_back(p);
  return out;
}

std::size_t GreenFunctionResult::probe_position(int orbital) const {
  auto it = std::find(probes.begin(), probes.end(), orbital);
  if (it == probes.end()) throw std::domain_error("orbital is not a probe of this result");
  return static_cast<std::size_t>(it - probes.begin());
}

GreenFunctionResult GreenFunctionResult::zeros(FrequencyGrid grid, std::vector<int> probes) {
  GreenFunctionResult g;
  const auto n = static_cast<Eigen::Index>(probes.size());
  g.hole.assign(grid.size(), Eigen::MatrixXcd::Zero(n, n));
  g.particle.assign(grid.size(), Eigen::MatrixXcd::Zero(n, n));
  g.blocks.assign(probes.size(), std::vector<std::string>(probes.size(), "emb"));
  g.grid = std::move(grid);
  g.probes = std::move(probes);
  return g;
}

Eigen::MatrixXd spectral_function(const GreenFunctionResult& g) {
  g.grid.validate();
  const auto np = static_cast<Eigen::Index>(g.probes.size());
  Eigen::MatrixXd a(np, static_cast<Eigen::Index>(g.grid.size()));
  for (std::size_t w = 0; w < g.grid.size(); ++w)
    for (Eigen::Index k = 0; k < np; ++k)
      a(k, static_cast<Eigen::Index>(w)) =
          (g.hole[w](k, k).imag() - g.particle[w](k, k).imag()) / std::numbers::pi;
  return a;
}

double integrate_spectrum(const FrequencyGrid& grid, const Eigen::VectorXd& a) {
  double s = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    s += 0.5 * (grid.omegas[i] - grid.omegas[i - 1]) *
         (a[static_cast<Eigen::Index>(i)] + a[static_cast<Eigen::Index>(i - 1)]);
  return s;
}

std::vector<double> find_peaks(const FrequencyGrid& grid, const Eigen::VectorXd& a,
                               double min_height) {
  std::vector<double> peaks;
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double y0 = a[k - 1], y1 = a[k], y2 = a[k + 1];
    if (!(y1 > y0 && y1 >= y2) || y1 < min_height) continue;
    const double x0 = grid.omegas[i - 1], x1 = grid.omegas[i], x2 = grid.omegas[i + 1];
    // vertex of the parabola through the three samples
    const double d1 = (y1 - y0) / (x1 - x0), d2 = (y2 - y1) / (x2 - x1);
    const double curv = (d2 - d1) / (x2 - x0);
    double x = x1;
    if (curv < 0) x = 0.5 * (x0 + x1) - d1 / (2.0 * curv);
    peaks.push_back(std::clamp(x, x0, x2));
  }
  return peaks;
}

}  // namespace sescc
