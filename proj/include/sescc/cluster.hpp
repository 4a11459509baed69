#pragma once

// Excitation signatures, amplitude sets and the exact exponential algebra.
//
// An excitation (i1..ik -> a1..ak) stands for E = a_{a1}^+ ... a_{ak}^+ a_{ik} ... a_{i1};
// |Phi_mu> = E_mu |Phi> carries the sign of that product. T amplitudes multiply
// E, while Lambda and S amplitudes multiply E^+ (de-excitations).

#include "sescc/fockspace.hpp"

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace sescc {

struct Excitation {
  std::vector<int> holes;
  std::vector<int> particles;

  int rank() const { return static_cast<int>(holes.size()); }
  SecondQuantizedOp op() const;
  /// "0,3->1,5"
  std::string label() const;
  static Excitation parse(const std::string& label);
  /// Signature taking `reference` to `target` (same particle number).
  static Excitation between(const Determinant& reference, const Determinant& target);

  bool operator==(const Excitation&) const = default;
  /// Rank first, then holes, then particles.
  std::strong_ordering operator<=>(const Excitation& other) const;
};

enum class AmplitudeKind { T, Lambda, S };
const char* to_string(AmplitudeKind k);
AmplitudeKind amplitude_kind_from_string(const std::string& s);

struct AmplitudeSet {
  AmplitudeKind kind = AmplitudeKind::T;
  Determinant reference;
  std::map<Excitation, double> amplitudes;

  double at(const Excitation& e) const;  // 0 when absent
  std::vector<Excitation> signatures() const;
  double max_abs() const;
  bool operator==(const AmplitudeSet&) const = default;
};

/// Entries of `a` overwritten or extended by those of `b`.
AmplitudeSet merged(const AmplitudeSet& a, const AmplitudeSet& b);
AmplitudeSet negated(const AmplitudeSet& a);
AmplitudeSet with_kind(const AmplitudeSet& a, AmplitudeKind kind);
/// Entries of `a` on the listed signatures only (absent ones become 0).
AmplitudeSet restricted(const AmplitudeSet& a, const std::vector<Excitation>& keep);
/// max |a_mu - b_mu| over the union of signatures.
double max_difference(const AmplitudeSet& a, const AmplitudeSet& b);

struct ActiveSpace {
  std::set<int> R;  // active occupied
  std::set<int> S;  // active virtual

  bool contains(const Excitation& e) const;
  /// Throws std::domain_error unless R is occupied and S virtual in `reference`.
  void validate(const Determinant& reference) const;
  static ActiveSpace full(const Determinant& reference);
  bool operator==(const ActiveSpace&) const = default;
};

struct SubsystemSpec {
  ActiveSpace active;
  std::string label;
  bool operator==(const SubsystemSpec&) const = default;
};

/// Excitations of rank 1..rank_max out of `reference`. With spin labels, only
/// those conserving the number of up electrons are kept.
std::vector<Excitation> enumerate_excitations(const Determinant& reference, int rank_max,
                                              std::span<const Spin> spins = {});

/// Excitations of `manifold` lying inside the active space.
std::vector<Excitation> internal_excitations(const std::vector<Excitation>& manifold,
                                             const ActiveSpace& h);

std::pair<AmplitudeSet, AmplitudeSet> split(const AmplitudeSet& amps, const ActiveSpace& h);

/// Sum of x_mu E_mu (T) or x_mu E_mu^+ (Lambda, S) on a sector.
OperatorMatrix excitation_matrix(const AmplitudeSet& amps, SectorPtr sector);
/// Terminating power series of excitation_matrix. Lambda input is rejected.
OperatorMatrix exp_map(const AmplitudeSet& amps, SectorPtr sector);
/// exp(X) of a nilpotent dense matrix; throws if the series does not terminate.
Eigen::MatrixXd nilpotent_exp(const Eigen::MatrixXd& x);
/// e^{-X} H e^{X}.
OperatorMatrix similarity_transform(const OperatorMatrix& H, const AmplitudeSet& amps);

/// Excitation-indexed view of a sector: positions and signs of E_mu |Phi>.
class ExcitationSpace {
 public:
  ExcitationSpace(Determinant reference, std::vector<Excitation> excitations, SectorPtr sector);

  const Determinant& reference() const { return reference_; }
  const std::vector<Excitation>& excitations() const { return excitations_; }
  const SectorPtr& sector() const { return sector_; }
  std::size_t size() const { return excitations_.size(); }
  std::size_t reference_index() const { return ref_index_; }
  std::size_t det_index(std::size_t k) const { return det_index_[k]; }
  int sign(std::size_t k) const { return sign_[k]; }
  std::optional<std::size_t> position(const Excitation& e) const;

  /// c_mu = <Phi_mu| state.
  Eigen::VectorXd project(const Eigen::VectorXd& state) const;
  /// ref_coeff |Phi> + sum_mu c_mu |Phi_mu>.
  Eigen::VectorXd embed(double ref_coeff, const Eigen::VectorXd& coeffs) const;

  Eigen::VectorXd values(const AmplitudeSet& amps) const;
  AmplitudeSet amplitudes(AmplitudeKind kind, const Eigen::VectorXd& values) const;

 private:
  Determinant reference_;
  std::vector<Excitation> excitations_;
  SectorPtr sector_;
  std::size_t ref_index_ = 0;
  std::vector<std::size_t> det_index_;
  std::vector<int> sign_;
  std::map<Excitation, std::size_t> lookup_;
};

/// Sparse vector over determinants keyed by bit pattern.
using SparseState = std::map<std::uint64_t, double>;

/// e^{X}|Phi> with X = sum x_mu E_mu, evaluated on determinants (kind ignored).
SparseState exp_on_reference(const AmplitudeSet& amps);
/// <Phi_mu| e^{X} |Phi> for each signature of `amps`.
AmplitudeSet exp_coefficients(const AmplitudeSet& amps, AmplitudeKind out_kind);
/// Inverse of exp_coefficients on the same signature set: amplitudes x with
/// <Phi_mu| e^{X}|Phi> = c_mu, solved rank by rank.
AmplitudeSet log_coefficients(const AmplitudeSet& c, AmplitudeKind out_kind);

/// <Phi|(1+Lambda) = <Phi|e^{S}, restricted to the signatures of the input.
AmplitudeSet lambda_from_s(const AmplitudeSet& s);
AmplitudeSet s_from_lambda(const AmplitudeSet& lambda);

}  // namespace sescc
