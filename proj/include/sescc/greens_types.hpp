#pragma once

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace sescc {

using cplx = std::complex<double>;

struct FrequencyGrid {
  std::vector<double> omegas;
  double eta = 0.05;

  /// Points lo, lo+step, ... up to hi (inclusive within half a step).
  static FrequencyGrid uniform(double lo, double hi, double step, double eta);
  void validate() const;  // throws std::domain_error
  std::size_t size() const noexcept { return omegas.size(); }
};

/// A single pole of one diagonal GF element: weight / (omega - position).
struct Pole {
  double position = 0.0;
  double weight = 0.0;
};

/// Groups poles closer than `merge_tol` (summing weights) and drops those with
/// |weight| < `drop_tol`. Output sorted by position.
std::vector<Pole> consolidate_poles(std::vector<Pole> poles, double merge_tol = 1e-8,
                                    double drop_tol = 1e-10);

/// Block tag of one (K, L) element: "emb", "env1", "env2", "env3" in the
/// single-center layout; "emb<i>" / "env" for multi-center.
using BlockLabels = std::vector<std::vector<std::string>>;

struct GreenFunctionResult {
  FrequencyGrid grid;
  std::vector<int> probes;
  // Ionization (hole) and attachment (particle) contributions, per omega.
  std::vector<Eigen::MatrixXcd> hole;
  std::vector<Eigen::MatrixXcd> particle;
  BlockLabels blocks;
  // Optional internal/external decomposition, per omega.
  std::optional<std::vector<Eigen::MatrixXcd>> internal;
  std::optional<std::vector<Eigen::MatrixXcd>> external;

  Eigen::MatrixXcd total(std::size_t w) const { return hole[w] + particle[w]; }
  cplx element(std::size_t w, std::size_t k, std::size_t l) const {
    return hole[w](k, l) + particle[w](k, l);
  }
  std::size_t probe_position(int orbital) const;  // throws std::domain_error

  static GreenFunctionResult zeros(FrequencyGrid grid, std::vector<int> probes);
};

/// A_K(omega) for every probe, rows = probes, columns = omegas.
/// Hole part contributes +Im/pi, particle part -Im/pi.
Eigen::MatrixXd spectral_function(const GreenFunctionResult& g);

/// Trapezoidal integral of one spectral row over the grid.
double integrate_spectrum(const FrequencyGrid& grid, const Eigen::VectorXd& a);

/// Local maxima of a sampled curve, refined by a parabola through the three
/// neighbouring samples. Maxima below `min_height` are ignored.
std::vector<double> find_peaks(const FrequencyGrid& grid, const Eigen::VectorXd& a,
                               double min_height = 0.0);

}  // namespace sescc
