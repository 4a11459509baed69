#pragma once

// Determinant-basis Fock-space algebra on at most 64 spin-orbitals.
//
// Sign convention: a determinant with occupied set {p1 < p2 < ... < pn} is
// a_{p1}^+ a_{p2}^+ ... a_{pn}^+ |vac>, so a_p or a_p^+ acting on it picks up
// (-1)^(number of occupied orbitals with index < p).

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sescc {

enum class Spin { Up, Down };

struct Locality {
  enum class Kind { Impurity, Bath, Other };
  Kind kind = Kind::Other;
  int bath_index = -1;
};

struct SpinOrbital {
  int index = 0;
  Spin spin = Spin::Up;
  Locality locality;
};

class Determinant {
 public:
  Determinant() = default;
  Determinant(int n_orbitals, std::uint64_t bits);

  /// Parses "100110": character p is the occupation of spin-orbital p.
  static Determinant from_string(const std::string& occupation);
  static Determinant from_orbitals(int n_orbitals, std::span<const int> occupied);

  int n_orbitals() const noexcept { return n_orbitals_; }
  std::uint64_t bits() const noexcept { return bits_; }
  bool occupied(int p) const noexcept { return (bits_ >> p) & 1U; }
  int count() const noexcept;
  /// Occupied orbitals strictly below p.
  int count_below(int p) const noexcept;
  std::vector<int> occupied_orbitals() const;
  std::vector<int> virtual_orbitals() const;
  std::string to_string() const;

  Determinant with(int p, bool occupied) const;

  bool operator==(const Determinant& other) const noexcept = default;
  /// Lexicographic on the printed bitstring (orbital 0 is the leading character).
  std::strong_ordering operator<=>(const Determinant& other) const noexcept;

 private:
  int n_orbitals_ = 0;
  std::uint64_t bits_ = 0;
};

class SectorBasis {
 public:
  SectorBasis(int n_orbitals, int n_electrons, std::vector<Determinant> determinants);

  int n_orbitals() const noexcept { return n_orbitals_; }
  int n_electrons() const noexcept { return n_electrons_; }
  std::size_t size() const noexcept { return dets_.size(); }
  const std::vector<Determinant>& determinants() const noexcept { return dets_; }
  const Determinant& operator[](std::size_t i) const { return dets_[i]; }
  std::optional<std::size_t> find(const Determinant& d) const;
  std::size_t index_of(const Determinant& d) const;  // throws std::domain_error
  bool contains(const Determinant& d) const { return find(d).has_value(); }

  bool operator==(const SectorBasis& other) const noexcept {
    return n_orbitals_ == other.n_orbitals_ && n_electrons_ == other.n_electrons_ &&
           dets_ == other.dets_;
  }

 private:
  int n_orbitals_;
  int n_electrons_;
  std::vector<Determinant> dets_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

using SectorPtr = std::shared_ptr<const SectorBasis>;

/// All C(M, n) determinants in canonical order.
SectorPtr build_sector(int n_orbitals, int n_electrons);
/// Determinants with fixed up/down counts; spins[p] labels orbital p.
SectorPtr build_spin_sector(std::span<const Spin> spins, int n_up, int n_down);

struct Ladder {
  int orbital = 0;
  bool dagger = false;
  bool operator==(const Ladder&) const = default;
};

struct OpTerm {
  double coefficient = 1.0;
  std::vector<Ladder> ops;  // operator product, rightmost acts first
  int particle_change() const;
  bool operator==(const OpTerm&) const = default;
};

class SecondQuantizedOp {
 public:
  SecondQuantizedOp() = default;
  explicit SecondQuantizedOp(std::vector<OpTerm> terms) : terms_(std::move(terms)) {}

  static SecondQuantizedOp identity();
  static SecondQuantizedOp annihilator(int p);
  static SecondQuantizedOp creator(int p);
  static SecondQuantizedOp number(int p);

  void add(double coefficient, std::vector<Ladder> ops);
  const std::vector<OpTerm>& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }

  /// Common particle-number change of all terms; throws if the terms disagree.
  int particle_change() const;
  /// Orbitals touched by any term, sorted.
  std::vector<int> support() const;

  SecondQuantizedOp scaled(double factor) const;
  SecondQuantizedOp adjoint() const;
  friend SecondQuantizedOp operator+(const SecondQuantizedOp& a, const SecondQuantizedOp& b);
  friend SecondQuantizedOp operator*(const SecondQuantizedOp& a, const SecondQuantizedOp& b);
  bool operator==(const SecondQuantizedOp&) const = default;

 private:
  std::vector<OpTerm> terms_;
};

/// Action of one opstring on a determinant: target and sign, or nothing.
std::optional<std::pair<Determinant, int>> apply_term(std::span<const Ladder> ops,
                                                      const Determinant& det);

struct StateVector {
  SectorPtr sector;
  Eigen::VectorXd coefficients;

  static StateVector basis_vector(SectorPtr sector, const Determinant& d);
  double operator[](const Determinant& d) const;
};

struct OperatorMatrix {
  SectorPtr domain;
  SectorPtr codomain;
  Eigen::SparseMatrix<double> matrix;

  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix); }
};

/// Maps v into the sector with n + op.particle_change() electrons.
StateVector apply_opstring(const SecondQuantizedOp& op, const StateVector& v);
OperatorMatrix to_matrix(const SecondQuantizedOp& op, SectorPtr from, SectorPtr to);
/// Square operator on one sector.
OperatorMatrix to_matrix(const SecondQuantizedOp& op, SectorPtr sector);
OperatorMatrix projector(std::span<const Determinant> subset, SectorPtr sector);

}  // namespace sescc
