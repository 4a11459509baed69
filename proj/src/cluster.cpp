#include "sescc/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sescc {

namespace {

std::vector<Ladder> excitation_ladders(const Excitation& e) {
  std::vector<Ladder> ops;
  ops.reserve(2 * e.holes.size());
  for (int a : e.particles) ops.push_back({a, true});
  for (auto it = e.holes.rbegin(); it != e.holes.rend(); ++it) ops.push_back({*it, false});
  return ops;
}

std::vector<int> parse_index_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const int v = std::stoi(item, &used);
    if (used != item.size()) throw std::domain_error("bad orbital index: " + item);
    out.push_back(v);
  }
  return out;
}

void combinations(const std::vector<int>& pool, int k, std::size_t start, std::vector<int>& cur,
                  std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == k) {
    out.push_back(cur);
    return;
  }
  for (std::size_t i = start; i < pool.size(); ++i) {
    cur.push_back(pool[i]);
    combinations(pool, k, i + 1, cur, out);
    cur.pop_back();
  }
}

SparseState apply_excitations(const AmplitudeSet& amps, const SparseState& state, int n_orbitals) {
  SparseState out;
  for (const auto& [bits, c] : state) {
    if (c == 0.0) continue;
    const Determinant d(n_orbitals, bits);
    for (const auto& [e, x] : amps.amplitudes) {
      if (x == 0.0) continue;
      const auto ops = excitation_ladders(e);
      if (auto r = apply_term(ops, d)) out[r->first.bits()] += x * r->second * c;
    }
  }
  return out;
}

// <Phi_mu| psi for a sparse psi.
double overlap_with(const Excitation& e, const Determinant& ref, const SparseState& psi) {
  auto r = apply_term(excitation_ladders(e), ref);
  if (!r) throw std::domain_error("signature " + e.label() + " does not act on the reference");
  auto it = psi.find(r->first.bits());
  return it == psi.end() ? 0.0 : r->second * it->second;
}

}  // namespace

// ---------------------------------------------------------------------------
// Excitation

SecondQuantizedOp Excitation::op() const {
  SecondQuantizedOp o;
  o.add(1.0, excitation_ladders(*this));
  return o;
}

std::string Excitation::label() const {
  std::string s;
  for (std::size_t i = 0; i < holes.size(); ++i) s += (i ? "," : "") + std::to_string(holes[i]);
  s += "->";
  for (std::size_t i = 0; i < particles.size(); ++i)
    s += (i ? "," : "") + std::to_string(particles[i]);
  return s;
}

Excitation Excitation::parse(const std::string& label) {
  const auto arrow = label.find("->");
  if (arrow == std::string::npos) throw std::domain_error("excitation label needs '->': " + label);
  Excitation e{parse_index_list(label.substr(0, arrow)), parse_index_list(label.substr(arrow + 2))};
  if (e.holes.size() != e.particles.size() || e.holes.empty())
    throw std::domain_error("excitation must have equal, nonzero hole and particle counts");
  if (!std::is_sorted(e.holes.begin(), e.holes.end()) ||
      !std::is_sorted(e.particles.begin(), e.particles.end()))
    throw std::domain_error("excitation indices must be increasing");
  return e;
}

Excitation Excitation::between(const Determinant& reference, const Determinant& target) {
  if (reference.n_orbitals() != target.n_orbitals() || reference.count() != target.count())
    throw std::domain_error("determinants differ in orbital or electron count");
  Excitation e;
  for (int p = 0; p < reference.n_orbitals(); ++p) {
    if (reference.occupied(p) && !target.occupied(p)) e.holes.push_back(p);
    if (!reference.occupied(p) && target.occupied(p)) e.particles.push_back(p);
  }
  return e;
}

std::strong_ordering Excitation::operator<=>(const Excitation& other) const {
  if (auto c = rank() <=> other.rank(); c != 0) return c;
  if (auto c = holes <=> other.holes; c != 0) return c;
  return particles <=> other.particles;
}

const char* to_string(AmplitudeKind k) {
  switch (k) {
    case AmplitudeKind::T: return "T";
    case AmplitudeKind::Lambda: return "Lambda";
    case AmplitudeKind::S: return "S";
  }
  return "?";
}

AmplitudeKind amplitude_kind_from_string(const std::string& s) {
  if (s == "T") return AmplitudeKind::T;
  if (s == "Lambda") return AmplitudeKind::Lambda;
  if (s == "S") return AmplitudeKind::S;
  throw std::domain_error("unknown amplitude kind: " + s);
}

// ---------------------------------------------------------------------------
// AmplitudeSet

double AmplitudeSet::at(const Excitation& e) const {
  auto it = amplitudes.find(e);
  return it == amplitudes.end() ? 0.0 : it->second;
}

std::vector<Excitation> AmplitudeSet::signatures() const {
  std::vector<Excitation> out;
  out.reserve(amplitudes.size());
  for (const auto& [e, x] : amplitudes) out.push_back(e);
  return out;
}

double AmplitudeSet::max_abs() const {
  double m = 0.0;
  for (const auto& [e, x] : amplitudes) m = std::max(m, std::abs(x));
  return m;
}

AmplitudeSet merged(const AmplitudeSet& a, const AmplitudeSet& b) {
  auto out = a;
  for (const auto& [e, x] : b.amplitudes) out.amplitudes[e] = x;
  return out;
}

AmplitudeSet negated(const AmplitudeSet& a) {
  auto out = a;
  for (auto& [e, x] : out.amplitudes) x = -x;
  return out;
}

AmplitudeSet with_kind(const AmplitudeSet& a, AmplitudeKind kind) {
  auto out = a;
  out.kind = kind;
  return out;
}

AmplitudeSet restricted(const AmplitudeSet& a, const std::vector<Excitation>& keep) {
  AmplitudeSet out{a.kind, a.reference, {}};
  for (const auto& e : keep) out.amplitudes[e] = a.at(e);
  return out;
}

double max_difference(const AmplitudeSet& a, const AmplitudeSet& b) {
  double m = 0.0;
  for (const auto& [e, x] : a.amplitudes) m = std::max(m, std::abs(x - b.at(e)));
  for (const auto& [e, x] : b.amplitudes) m = std::max(m, std::abs(x - a.at(e)));
  return m;
}

// ---------------------------------------------------------------------------
// ActiveSpace

bool ActiveSpace::contains(const Excitation& e) const {
  return std::all_of(e.holes.begin(), e.holes.end(), [&](int i) { return R.count(i) > 0; }) &&
         std::all_of(e.particles.begin(), e.particles.end(), [&](int a) { return S.count(a) > 0; });
}

void ActiveSpace::validate(const Determinant& reference) const {
  for (int i : R)
    if (i < 0 || i >= reference.n_orbitals() || !reference.occupied(i))
      throw std::domain_error("active occupied orbital " + std::to_string(i) + " is not occupied");
  for (int a : S)
    if (a < 0 || a >= reference.n_orbitals() || reference.occupied(a))
      throw std::domain_error("active virtual orbital " + std::to_string(a) + " is not virtual");
}

ActiveSpace ActiveSpace::full(const Determinant& reference) {
  ActiveSpace h;
  for (int p : reference.occupied_orbitals()) h.R.insert(p);
  for (int p : reference.virtual_orbitals()) h.S.insert(p);
  return h;
}

std::vector<Excitation> enumerate_excitations(const Determinant& reference, int rank_max,
                                              std::span<const Spin> spins) {
  if (!spins.empty() && static_cast<int>(spins.size()) != reference.n_orbitals())
    throw std::domain_error("spin labels do not match the orbital count");
  const auto occ = reference.occupied_orbitals();
  const auto vir = reference.virtual_orbitals();
  auto n_up = [&](const std::vector<int>& v) {
    return std::count_if(v.begin(), v.end(),
                         [&](int p) { return spins[static_cast<std::size_t>(p)] == Spin::Up; });
  };
  std::vector<Excitation> out;
  const int kmax = std::min({rank_max, static_cast<int>(occ.size()), static_cast<int>(vir.size())});
  for (int k = 1; k <= kmax; ++k) {
    std::vector<std::vector<int>> hs, ps;
    std::vector<int> cur;
    combinations(occ, k, 0, cur, hs);
    combinations(vir, k, 0, cur, ps);
    for (const auto& h : hs)
      for (const auto& p : ps) {
        if (!spins.empty() && n_up(h) != n_up(p)) continue;
        out.push_back({h, p});
      }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Excitation> internal_excitations(const std::vector<Excitation>& manifold,
                                             const ActiveSpace& h) {
  std::vector<Excitation> out;
  for (const auto& e : manifold)
    if (h.contains(e)) out.push_back(e);
  return out;
}

std::pair<AmplitudeSet, AmplitudeSet> split(const AmplitudeSet& amps, const ActiveSpace& h) {
  AmplitudeSet in{amps.kind, amps.reference, {}}, ex{amps.kind, amps.reference, {}};
  for (const auto& [e, x] : amps.amplitudes) (h.contains(e) ? in : ex).amplitudes.emplace(e, x);
  return {in, ex};
}

// ---------------------------------------------------------------------------
// Matrices

OperatorMatrix excitation_matrix(const AmplitudeSet& amps, SectorPtr sector) {
  SecondQuantizedOp x;
  for (const auto& [e, v] : amps.amplitudes) x.add(v, excitation_ladders(e));
  if (amps.kind != AmplitudeKind::T) x = x.adjoint();
  return to_matrix(x, sector, sector);
}

Eigen::MatrixXd nilpotent_exp(const Eigen::MatrixXd& x) {
  const auto n = x.rows();
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = result;
  for (Eigen::Index k = 1; k <= n + 1; ++k) {
    term = term * x / static_cast<double>(k);
    if (term.isZero(0.0)) return result;
    result += term;
  }
  throw std::domain_error("exponential series does not terminate (operator is not nilpotent)");
}

OperatorMatrix exp_map(const AmplitudeSet& amps, SectorPtr sector) {
  if (amps.kind == AmplitudeKind::Lambda)
    throw std::domain_error("Lambda amplitudes have no exponential parametrization");
  const auto x = excitation_matrix(amps, sector);
  const Eigen::MatrixXd e = nilpotent_exp(x.dense());
  return OperatorMatrix{sector, sector, e.sparseView()};
}

OperatorMatrix similarity_transform(const OperatorMatrix& H, const AmplitudeSet& amps) {
  if (amps.kind == AmplitudeKind::Lambda)
    throw std::domain_error("Lambda amplitudes have no exponential parametrization");
  if (H.domain != H.codomain && !(*H.domain == *H.codomain))
    throw std::domain_error("similarity transform needs a square operator");
  const Eigen::MatrixXd x = excitation_matrix(amps, H.domain).dense();
  const Eigen::MatrixXd hb = nilpotent_exp(-x) * H.dense() * nilpotent_exp(x);
  return OperatorMatrix{H.domain, H.codomain, hb.sparseView()};
}

// ---------------------------------------------------------------------------
// ExcitationSpace

ExcitationSpace::ExcitationSpace(Determinant reference, std::vector<Excitation> excitations,
                                 SectorPtr sector)
    : reference_(std::move(reference)), excitations_(std::move(excitations)), sector_(std::move(sector)) {
  ref_index_ = sector_->index_of(reference_);
  for (std::size_t k = 0; k < excitations_.size(); ++k) {
    const auto& e = excitations_[k];
    auto r = apply_term(excitation_ladders(e), reference_);
    if (!r) throw std::domain_error("signature " + e.label() + " does not act on the reference");
    auto i = sector_->find(r->first);
    if (!i) throw std::domain_error("signature " + e.label() + " leaves the sector");
    det_index_.push_back(*i);
    sign_.push_back(r->second);
    if (!lookup_.emplace(e, k).second) throw std::domain_error("duplicate signature " + e.label());
  }
}

std::optional<std::size_t> ExcitationSpace::position(const Excitation& e) const {
  auto it = lookup_.find(e);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

Eigen::VectorXd ExcitationSpace::project(const Eigen::VectorXd& state) const {
  Eigen::VectorXd c(static_cast<Eigen::Index>(size()));
  for (std::size_t k = 0; k < size(); ++k)
    c[static_cast<Eigen::Index>(k)] = sign_[k] * state[static_cast<Eigen::Index>(det_index_[k])];
  return c;
}

Eigen::VectorXd ExcitationSpace::embed(double ref_coeff, const Eigen::VectorXd& coeffs) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sector_->size()));
  v[static_cast<Eigen::Index>(ref_index_)] = ref_coeff;
  for (std::size_t k = 0; k < size(); ++k)
    v[static_cast<Eigen::Index>(det_index_[k])] += sign_[k] * coeffs[static_cast<Eigen::Index>(k)];
  return v;
}

Eigen::VectorXd ExcitationSpace::values(const AmplitudeSet& amps) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
  for (const auto& [e, x] : amps.amplitudes) {
    auto k = position(e);
    if (!k) throw std::domain_error("signature " + e.label() + " is outside the excitation space");
    v[static_cast<Eigen::Index>(*k)] = x;
  }
  return v;
}

AmplitudeSet ExcitationSpace::amplitudes(AmplitudeKind kind, const Eigen::VectorXd& values) const {
  AmplitudeSet a{kind, reference_, {}};
  for (std::size_t k = 0; k < size(); ++k)
    a.amplitudes.emplace(excitations_[k], values[static_cast<Eigen::Index>(k)]);
  return a;
}

// ---------------------------------------------------------------------------
// Cluster analysis

SparseState exp_on_reference(const AmplitudeSet& amps) {
  const auto& ref = amps.reference;
  SparseState psi{{ref.bits(), 1.0}};
  SparseState term = psi;
  for (int n = 1; n <= ref.count() + 1; ++n) {
    term = apply_excitations(amps, term, ref.n_orbitals());
    for (auto& [b, c] : term) c /= n;
    std::erase_if(term, [](const auto& kv) { return kv.second == 0.0; });
    if (term.empty()) return psi;
    for (const auto& [b, c] : term) psi[b] += c;
  }
  throw std::domain_error("exponential series does not terminate");
}

AmplitudeSet exp_coefficients(const AmplitudeSet& amps, AmplitudeKind out_kind) {
  const auto psi = exp_on_reference(amps);
  AmplitudeSet c{out_kind, amps.reference, {}};
  for (const auto& [e, x] : amps.amplitudes) c.amplitudes.emplace(e, overlap_with(e, amps.reference, psi));
  return c;
}

AmplitudeSet log_coefficients(const AmplitudeSet& c, AmplitudeKind out_kind) {
  AmplitudeSet x{out_kind, c.reference, {}};
  int current_rank = 0;
  SparseState psi;
  for (const auto& [e, v] : c.amplitudes) {
    if (e.rank() != current_rank) {
      current_rank = e.rank();
      psi = exp_on_reference(x);  // built from all lower ranks
    }
    x.amplitudes.emplace(e, v - overlap_with(e, c.reference, psi));
  }
  return x;
}

AmplitudeSet lambda_from_s(const AmplitudeSet& s) {
  return exp_coefficients(s, AmplitudeKind::Lambda);
}

AmplitudeSet s_from_lambda(const AmplitudeSet& lambda) {
  return log_coefficients(lambda, AmplitudeKind::S);
}

}  // namespace sescc
