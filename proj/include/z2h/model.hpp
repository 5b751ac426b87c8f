#pragma once

#include <cmath>
#include <span>
#include <unordered_map>
#include <vector>

#include "z2h/pauli.hpp"
#include "z2h/types.hpp"

namespace z2h {

struct LatticeParams {
  int n_phys = 5;
  double mass = 1.0;
  double eps = -0.3;
  double hopping = 1.0;  // scale on the hopping part; 0 gives the diagonal limit

  int n_stag() const { return 2 * n_phys; }
  int boson() const { return n_stag(); }
  int n_sys() const { return n_stag() + 1; }
  u64 fermion_mask() const { return bit(n_stag()) - 1; }
  int alpha_n() const { return (n_phys % 2 == 1) ? 1 : -1; }

  void validate() const {
    if (n_phys < 1) throw ConfigError("n_phys must be >= 1");
    if (!(mass >= 0.0)) throw ConfigError("mass must be >= 0");
    if (!std::isfinite(eps)) throw ConfigError("eps must be finite");
    if (n_sys() > 40) throw ResourceError("lattice too large for a 64-bit basis index");
  }
};

// Integer labels i with k = i*pi/N_P, covering [-pi/2, pi/2).
inline std::vector<int> momentum_labels(int n_phys) {
  std::vector<int> out;
  for (int i = -n_phys; i < n_phys; ++i) {
    if (2 * i >= -n_phys && 2 * i < n_phys) out.push_back(i);
  }
  return out;
}

inline double momentum(int label, int n_phys) { return label * kPi / n_phys; }

inline std::vector<double> brillouin_zone(const LatticeParams& p) {
  std::vector<double> ks;
  for (int i : momentum_labels(p.n_phys)) ks.push_back(momentum(i, p.n_phys));
  return ks;
}

// Index of the zone entry closest to k, or -1 if none within tol.
inline int momentum_index(double k, int n_phys, double tol = 1e-9) {
  const auto labels = momentum_labels(n_phys);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (std::abs(momentum(labels[i], n_phys) - k) < tol) return static_cast<int>(i);
  return -1;
}

inline int gamma_sign(int n) {
  // i^n for even n, i^(n+1) for odd n; both real.
  const int e = (n % 2 == 0) ? n : n + 1;
  return ((e / 2) % 2 == 0) ? 1 : -1;
}

struct HamiltonianParts {
  PauliSum hop;
  PauliSum mass;
  PauliSum elec;
  PauliSum total() const { return hop + mass + elec; }
};

inline PauliSum hopping_bond(const LatticeParams& p, int n) {
  const int N = p.n_stag(), nq = p.n_sys();
  PauliSum s(nq);
  PauliWord xx, yy;
  double c = 0.25 * p.hopping;
  if (n < N - 1) {
    xx.set(n, 'X'); xx.set(n + 1, 'X');
    yy.set(n, 'Y'); yy.set(n + 1, 'Y');
  } else {
    xx.set(N - 1, 'X'); xx.set(p.boson(), 'X'); xx.set(0, 'X');
    yy.set(N - 1, 'Y'); yy.set(p.boson(), 'X'); yy.set(0, 'Y');
    c *= p.alpha_n();
  }
  s.add(c, xx);
  s.add(c, yy);
  return s;
}

inline HamiltonianParts build_hamiltonian_parts(const LatticeParams& p) {
  p.validate();
  const int N = p.n_stag(), nq = p.n_sys();
  HamiltonianParts h{PauliSum(nq), PauliSum(nq), PauliSum(nq)};
  for (int n = 0; n < N; ++n) h.hop += hopping_bond(p, n);
  for (int n = 0; n < N; ++n)
    h.mass += PauliSum::single(nq, n, 'Z', 0.5 * p.mass * ((n % 2 == 1) ? 1.0 : -1.0));
  h.elec += PauliSum::single(nq, p.boson(), 'Z', p.eps);
  for (int n = 0; n < N - 1; ++n) {
    PauliWord w;
    w.set(p.boson(), 'Z');
    for (int j = 0; j <= n; ++j) w.set(j, 'Z');
    h.elec.add(p.eps * gamma_sign(n), w);
  }
  return h;
}

inline PauliSum build_hamiltonian(const LatticeParams& p) { return build_hamiltonian_parts(p).total(); }

inline PauliSum charge_operator(const LatticeParams& p) {
  PauliSum q(p.n_sys());
  for (int n = 0; n < p.n_stag(); ++n) q += number_op(p.n_sys(), n);
  return q.simplified();
}

// Fermions 0101...01 (odd sites filled); boson |0> unless eps > 0.
inline u64 scv_index(const LatticeParams& p) {
  u64 idx = 0;
  for (int n = 1; n < p.n_stag(); n += 2) idx |= bit(n);
  if (p.eps > 0) idx |= bit(p.boson());
  return idx;
}

inline bool in_sector(const LatticeParams& p, u64 idx) {
  return popcount(idx & p.fermion_mask()) == p.n_phys;
}

class SectorBasis {
 public:
  explicit SectorBasis(const LatticeParams& p) : params_(p) {
    p.validate();
    const int N = p.n_stag();
    // Enumerate fermion words of weight N_P in increasing order (Gosper's hack).
    u64 w = bit(p.n_phys) - 1;
    const u64 limit = bit(N);
    std::vector<u64> words;
    while (w < limit) {
      words.push_back(w);
      const u64 c = w & (~w + 1), r = w + c;
      w = (((r ^ w) >> 2) / c) | r;
    }
    states_.reserve(2 * words.size());
    for (u64 b = 0; b < 2; ++b)
      for (u64 f : words) states_.push_back(f | (b << N));
    std::sort(states_.begin(), states_.end());
    index_.reserve(states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i) index_[states_[i]] = i;
  }

  const LatticeParams& params() const { return params_; }
  std::size_t size() const { return states_.size(); }
  u64 state(std::size_t i) const { return states_[i]; }
  const std::vector<u64>& states() const { return states_; }

  bool contains(u64 s) const { return index_.count(s) != 0; }
  std::size_t index(u64 s) const {
    auto it = index_.find(s);
    if (it == index_.end()) throw Error("basis state outside the charge sector");
    return it->second;
  }

  // Sector vector -> amplitudes on a register of n_qubits (system in the low bits).
  std::vector<cplx> embed(std::span<const cplx> v, int n_qubits) const {
    if (v.size() != size()) throw Error("embed: dimension mismatch");
    std::vector<cplx> out(std::size_t{1} << n_qubits);
    for (std::size_t i = 0; i < size(); ++i) out[states_[i]] = v[i];
    return out;
  }

  // Restriction of a full register (ancillas fixed to `ancilla_bits`) onto the sector.
  std::vector<cplx> project(std::span<const cplx> full, u64 ancilla_bits = 0) const {
    std::vector<cplx> out(size());
    const u64 high = ancilla_bits << params_.n_sys();
    for (std::size_t i = 0; i < size(); ++i) {
      const u64 idx = states_[i] | high;
      if (idx >= full.size()) throw Error("project: register too small");
      out[i] = full[idx];
    }
    return out;
  }

 private:
  LatticeParams params_;
  std::vector<u64> states_;
  std::unordered_map<u64, std::size_t> index_;
};

}  // namespace z2h
