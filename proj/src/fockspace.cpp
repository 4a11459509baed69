#include "sescc/fockspace.hpp"

#include <algorithm>
#include <bit>
#include <set>
#include <stdexcept>

namespace sescc {

namespace {

std::uint64_t orbital_mask(int n) {
  return n >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1);
}

void check_orbital_count(int n) {
  if (n < 0 || n > 64) throw std::domain_error("orbital count must lie in [0, 64]");
}

// Enumerates n-subsets of `orbitals` as bitmasks, appended to `out`.
void enumerate_subsets(const std::vector<int>& orbitals, int n, std::size_t start,
                       std::uint64_t acc, std::vector<std::uint64_t>& out) {
  if (n == 0) {
    out.push_back(acc);
    return;
  }
  for (std::size_t i = start; i + n <= orbitals.size(); ++i)
    enumerate_subsets(orbitals, n - 1, i + 1, acc | (std::uint64_t{1} << orbitals[i]), out);
}

SectorPtr make_sector(int n_orbitals, int n_electrons, const std::vector<std::uint64_t>& masks) {
  std::vector<Determinant> dets;
  dets.reserve(masks.size());
  for (auto m : masks) dets.emplace_back(n_orbitals, m);
  std::sort(dets.begin(), dets.end());
  return std::make_shared<const SectorBasis>(n_orbitals, n_electrons, std::move(dets));
}

}  // namespace

// ---------------------------------------------------------------------------
// Determinant

Determinant::Determinant(int n_orbitals, std::uint64_t bits) : n_orbitals_(n_orbitals), bits_(bits) {
  check_orbital_count(n_orbitals);
  if (bits & ~orbital_mask(n_orbitals))
    throw std::domain_error("determinant occupies orbitals beyond its orbital count");
}

Determinant Determinant::from_string(const std::string& occupation) {
  check_orbital_count(static_cast<int>(occupation.size()));
  std::uint64_t bits = 0;
  for (std::size_t p = 0; p < occupation.size(); ++p) {
    if (occupation[p] == '1')
      bits |= std::uint64_t{1} << p;
    else if (occupation[p] != '0')
      throw std::domain_error("occupation string must contain only '0' and '1': " + occupation);
  }
  return Determinant(static_cast<int>(occupation.size()), bits);
}

Determinant Determinant::from_orbitals(int n_orbitals, std::span<const int> occupied) {
  std::uint64_t bits = 0;
  for (int p : occupied) {
    if (p < 0 || p >= n_orbitals) throw std::domain_error("orbital index out of range");
    bits |= std::uint64_t{1} << p;
  }
  return Determinant(n_orbitals, bits);
}

int Determinant::count() const noexcept { return std::popcount(bits_); }

int Determinant::count_below(int p) const noexcept {
  return std::popcount(bits_ & ((std::uint64_t{1} << p) - 1));
}

std::vector<int> Determinant::occupied_orbitals() const {
  std::vector<int> out;
  for (int p = 0; p < n_orbitals_; ++p)
    if (occupied(p)) out.push_back(p);
  return out;
}

std::vector<int> Determinant::virtual_orbitals() const {
  std::vector<int> out;
  for (int p = 0; p < n_orbitals_; ++p)
    if (!occupied(p)) out.push_back(p);
  return out;
}

std::string Determinant::to_string() const {
  std::string s(static_cast<std::size_t>(n_orbitals_), '0');
  for (int p = 0; p < n_orbitals_; ++p)
    if (occupied(p)) s[static_cast<std::size_t>(p)] = '1';
  return s;
}

Determinant Determinant::with(int p, bool occ) const {
  const auto bit = std::uint64_t{1} << p;
  return Determinant(n_orbitals_, occ ? (bits_ | bit) : (bits_ & ~bit));
}

std::strong_ordering Determinant::operator<=>(const Determinant& other) const noexcept {
  if (auto c = n_orbitals_ <=> other.n_orbitals_; c != 0) return c;
  const auto diff = bits_ ^ other.bits_;
  if (diff == 0) return std::strong_ordering::equal;
  const int p = std::countr_zero(diff);
  return occupied(p) ? std::strong_ordering::greater : std::strong_ordering::less;
}

// ---------------------------------------------------------------------------
// SectorBasis

SectorBasis::SectorBasis(int n_orbitals, int n_electrons, std::vector<Determinant> determinants)
    : n_orbitals_(n_orbitals), n_electrons_(n_electrons), dets_(std::move(determinants)) {
  index_.reserve(dets_.size());
  for (std::size_t i = 0; i < dets_.size(); ++i) {
    const auto& d = dets_[i];
    if (d.n_orbitals() != n_orbitals_ || d.count() != n_electrons_)
      throw std::domain_error("determinant " + d.to_string() + " does not belong to the sector");
    if (i > 0 && !(dets_[i - 1] < d))
      throw std::domain_error("sector determinants must be strictly increasing");
    index_.emplace(d.bits(), i);
  }
}

std::optional<std::size_t> SectorBasis::find(const Determinant& d) const {
  if (d.n_orbitals() != n_orbitals_) return std::nullopt;
  auto it = index_.find(d.bits());
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t SectorBasis::index_of(const Determinant& d) const {
  auto i = find(d);
  if (!i) throw std::domain_error("determinant " + d.to_string() + " is not in the sector");
  return *i;
}

SectorPtr build_sector(int n_orbitals, int n_electrons) {
  check_orbital_count(n_orbitals);
  if (n_electrons < 0 || n_electrons > n_orbitals)
    throw std::domain_error("electron count must lie in [0, M]");
  std::vector<int> all(static_cast<std::size_t>(n_orbitals));
  for (int p = 0; p < n_orbitals; ++p) all[static_cast<std::size_t>(p)] = p;
  std::vector<std::uint64_t> masks;
  enumerate_subsets(all, n_electrons, 0, 0, masks);
  return make_sector(n_orbitals, n_electrons, masks);
}

SectorPtr build_spin_sector(std::span<const Spin> spins, int n_up, int n_down) {
  const int m = static_cast<int>(spins.size());
  check_orbital_count(m);
  std::vector<int> up, down;
  for (int p = 0; p < m; ++p) (spins[static_cast<std::size_t>(p)] == Spin::Up ? up : down).push_back(p);
  if (n_up < 0 || n_down < 0 || n_up > static_cast<int>(up.size()) ||
      n_down > static_cast<int>(down.size()))
    throw std::domain_error("spin-resolved electron counts out of range");
  std::vector<std::uint64_t> up_masks, down_masks, masks;
  enumerate_subsets(up, n_up, 0, 0, up_masks);
  enumerate_subsets(down, n_down, 0, 0, down_masks);
  for (auto u : up_masks)
    for (auto d : down_masks) masks.push_back(u | d);
  return make_sector(m, n_up + n_down, masks);
}

// ---------------------------------------------------------------------------
// Operators

int OpTerm::particle_change() const {
  int delta = 0;
  for (const auto& l : ops) delta += l.dagger ? 1 : -1;
  return delta;
}

SecondQuantizedOp SecondQuantizedOp::identity() { return SecondQuantizedOp({OpTerm{1.0, {}}}); }
SecondQuantizedOp SecondQuantizedOp::annihilator(int p) {
  return SecondQuantizedOp({OpTerm{1.0, {{p, false}}}});
}
SecondQuantizedOp SecondQuantizedOp::creator(int p) {
  return SecondQuantizedOp({OpTerm{1.0, {{p, true}}}});
}
SecondQuantizedOp SecondQuantizedOp::number(int p) {
  return SecondQuantizedOp({OpTerm{1.0, {{p, true}, {p, false}}}});
}

void SecondQuantizedOp::add(double coefficient, std::vector<Ladder> ops) {
  terms_.push_back(OpTerm{coefficient, std::move(ops)});
}

int SecondQuantizedOp::particle_change() const {
  if (terms_.empty()) return 0;
  const int delta = terms_.front().particle_change();
  for (const auto& t : terms_)
    if (t.particle_change() != delta)
      throw std::domain_error("operator terms change particle number inconsistently");
  return delta;
}

std::vector<int> SecondQuantizedOp::support() const {
  std::set<int> s;
  for (const auto& t : terms_)
    for (const auto& l : t.ops) s.insert(l.orbital);
  return {s.begin(), s.end()};
}

SecondQuantizedOp SecondQuantizedOp::scaled(double factor) const {
  auto out = *this;
  for (auto& t : out.terms_) t.coefficient *= factor;
  return out;
}

SecondQuantizedOp SecondQuantizedOp::adjoint() const {
  auto out = *this;
  for (auto& t : out.terms_) {
    std::reverse(t.ops.begin(), t.ops.end());
    for (auto& l : t.ops) l.dagger = !l.dagger;
  }
  return out;
}

SecondQuantizedOp operator+(const SecondQuantizedOp& a, const SecondQuantizedOp& b) {
  auto out = a;
  out.terms_.insert(out.terms_.end(), b.terms_.begin(), b.terms_.end());
  return out;
}

SecondQuantizedOp operator*(const SecondQuantizedOp& a, const SecondQuantizedOp& b) {
  SecondQuantizedOp out;
  for (const auto& ta : a.terms_)
    for (const auto& tb : b.terms_) {
      OpTerm t{ta.coefficient * tb.coefficient, ta.ops};
      t.ops.insert(t.ops.end(), tb.ops.begin(), tb.ops.end());
      out.terms_.push_back(std::move(t));
    }
  return out;
}

std::optional<std::pair<Determinant, int>> apply_term(std::span<const Ladder> ops,
                                                      const Determinant& det) {
  Determinant d = det;
  int sign = 1;
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    const int p = it->orbital;
    if (p < 0 || p >= d.n_orbitals()) throw std::domain_error("ladder operator orbital out of range");
    if (it->dagger == d.occupied(p)) return std::nullopt;
    if (d.count_below(p) % 2) sign = -sign;
    d = d.with(p, it->dagger);
  }
  return std::make_pair(d, sign);
}

StateVector StateVector::basis_vector(SectorPtr sector, const Determinant& d) {
  StateVector v{sector, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sector->size()))};
  v.coefficients[static_cast<Eigen::Index>(sector->index_of(d))] = 1.0;
  return v;
}

double StateVector::operator[](const Determinant& d) const {
  auto i = sector->find(d);
  return i ? coefficients[static_cast<Eigen::Index>(*i)] : 0.0;
}

OperatorMatrix to_matrix(const SecondQuantizedOp& op, SectorPtr from, SectorPtr to) {
  if (!from || !to) throw std::domain_error("null sector");
  if (from->n_orbitals() != to->n_orbitals())
    throw std::domain_error("sectors have different orbital counts");
  const int delta = op.particle_change();
  if (from->n_electrons() + delta != to->n_electrons())
    throw std::domain_error("sector dimensions do not match the operator's particle-number change");
  std::vector<Eigen::Triplet<double>> entries;
  for (std::size_t j = 0; j < from->size(); ++j) {
    for (const auto& term : op.terms()) {
      auto r = apply_term(term.ops, (*from)[j]);
      if (!r) continue;
      auto i = to->find(r->first);
      if (!i) continue;
      entries.emplace_back(static_cast<int>(*i), static_cast<int>(j), term.coefficient * r->second);
    }
  }
  Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(to->size()),
                                static_cast<Eigen::Index>(from->size()));
  m.setFromTriplets(entries.begin(), entries.end());
  return OperatorMatrix{std::move(from), std::move(to), std::move(m)};
}

OperatorMatrix to_matrix(const SecondQuantizedOp& op, SectorPtr sector) {
  return to_matrix(op, sector, sector);
}

StateVector apply_opstring(const SecondQuantizedOp& op, const StateVector& v) {
  const int n = v.sector->n_electrons() + op.particle_change();
  SectorPtr target = (n == v.sector->n_electrons()) ? v.sector
                     : (n < 0 || n > v.sector->n_orbitals())
                         ? std::make_shared<const SectorBasis>(v.sector->n_orbitals(), 0,
                                                               std::vector<Determinant>{})
                         : build_sector(v.sector->n_orbitals(), n);
  if (target->size() == 0) return StateVector{target, Eigen::VectorXd::Zero(0)};
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(target->size()));
  for (std::size_t j = 0; j < v.sector->size(); ++j) {
    const double c = v.coefficients[static_cast<Eigen::Index>(j)];
    if (c == 0.0) continue;
    for (const auto& term : op.terms()) {
      auto r = apply_term(term.ops, (*v.sector)[j]);
      if (!r) continue;
      if (auto i = target->find(r->first))
        out[static_cast<Eigen::Index>(*i)] += term.coefficient * r->second * c;
    }
  }
  return StateVector{target, std::move(out)};
}

OperatorMatrix projector(std::span<const Determinant> subset, SectorPtr sector) {
  std::vector<Eigen::Triplet<double>> entries;
  std::set<std::size_t> seen;
  for (const auto& d : subset) {
    const auto i = sector->index_of(d);
    if (seen.insert(i).second) entries.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
  }
  const auto n = static_cast<Eigen::Index>(sector->size());
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(entries.begin(), entries.end());
  return OperatorMatrix{sector, sector, std::move(m)};
}

}  // namespace sescc
