#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "z2h/ansatz.hpp"
#include "z2h/model.hpp"
#include "z2h/simulator.hpp"

namespace z2h {

struct GroundStateAngles {
  double theta_h = 0.0;
  double theta_m = 0.0;
  int n_layers = 1;
  double theta_eps = 0.0;
};

// Sequence in which the hopping bonds are visited inside one hopping block.
enum class BondOrder { Sequential, EvenOdd };

inline std::vector<int> bond_sequence(const LatticeParams& p, BondOrder order) {
  const int N = p.n_stag();
  std::vector<int> out;
  if (order == BondOrder::Sequential) {
    for (int n = 0; n < N; ++n) out.push_back(n);
  } else {
    for (int n = 0; n < N; n += 2) out.push_back(n);
    for (int n = 1; n < N; n += 2) out.push_back(n);
  }
  return out;
}

// exp(-i theta (XX+YY)/2) on bond n; the closing bond runs through the boson qubit.
inline void append_bond(Circuit& c, const LatticeParams& p, int n, double theta, int ctrl = -1, bool yy_first = false) {
  const int N = p.n_stag();
  auto emit = [&](GateKind plain, GateKind controlled, std::vector<int> qs, double a) {
    if (ctrl < 0) {
      c.add({plain, std::move(qs), a});
    } else {
      qs.insert(qs.begin(), ctrl);
      c.add({controlled, std::move(qs), a});
    }
  };
  auto xx = [&] {
    if (n < N - 1) emit(GateKind::RXX, GateKind::CRXX, {n, n + 1}, theta);
    else emit(GateKind::RXXX, GateKind::CRXXX, {N - 1, p.boson(), 0}, p.alpha_n() * theta);
  };
  auto yy = [&] {
    if (n < N - 1) emit(GateKind::RYY, GateKind::CRYY, {n, n + 1}, theta);
    else emit(GateKind::RYXY, GateKind::CRYXY, {N - 1, p.boson(), 0}, p.alpha_n() * theta);
  };
  if (yy_first) { yy(); xx(); }
  else { xx(); yy(); }
}

inline void append_hopping_block(Circuit& c, const LatticeParams& p, double theta, BondOrder order, bool mirrored,
                                 int ctrl = -1) {
  auto seq = bond_sequence(p, order);
  if (mirrored) std::reverse(seq.begin(), seq.end());
  for (int n : seq) append_bond(c, p, n, theta, ctrl, mirrored);
}

// RZ((-1)^{n+1} theta) on every fermion qubit.
inline void append_mass_layer(Circuit& c, const LatticeParams& p, double theta, int ctrl = -1) {
  for (int n = 0; n < p.n_stag(); ++n) {
    const double a = (n % 2 == 1 ? 1.0 : -1.0) * theta;
    if (ctrl < 0) c.rz(n, a);
    else c.crz(ctrl, n, a);
  }
}

// exp(-i dt H_eps): parity ladder onto the boson qubit with a phase after every rung.
// Only the phases take the control in the controlled variant.
inline void append_electric_block(Circuit& c, const LatticeParams& p, double dt, int ctrl = -1) {
  const int N = p.n_stag(), b = p.boson();
  const double a = 2.0 * p.eps * dt;
  auto phase = [&] {
    if (ctrl < 0) c.rz(b, a);
    else c.crz(ctrl, b, a);
  };
  phase();
  for (int n = 0; n < N - 1; ++n) {
    c.cnot(n, b, n % 2 == 0 ? 1 : 0);
    phase();
  }
  c.cnot(N - 1, b, (N - 1) % 2 == 0 ? 1 : 0);
}

inline Circuit build_qgs(const GroundStateAngles& a, const LatticeParams& p, int n_qubits = -1,
                         BondOrder order = BondOrder::EvenOdd) {
  if (n_qubits < 0) n_qubits = p.n_sys();
  Circuit c(n_qubits);
  for (int l = 0; l < a.n_layers; ++l) {
    append_hopping_block(c, p, a.theta_h, order, false);
    append_mass_layer(c, p, a.theta_m);
    if (a.theta_eps != 0.0) append_electric_block(c, p, a.theta_eps);
  }
  c.mark("qgs", 0, c.size());
  return c;
}

struct EvolutionPlan {
  double dt = 1.0;
  int n_steps = 1;
  bool controlled = false;
  BondOrder order = BondOrder::EvenOdd;

  void validate() const {
    if (!(dt > 0)) throw ConfigError("evolution dt must be > 0");
    if (n_steps < 0) throw ConfigError("evolution n_steps must be >= 0");
  }
};

// Second-order step h(dt/2) m(dt/2) eps(dt) m(dt/2) h(dt/2); the closing hopping block
// visits the bonds in reverse so the step is symmetric.
inline void append_trotter_step(Circuit& c, const LatticeParams& p, double dt, BondOrder order, int ctrl = -1) {
  const double th = p.hopping * dt / 4.0, tm = p.mass * dt / 2.0;
  std::size_t s = c.size();
  append_hopping_block(c, p, th, order, false, ctrl);
  c.mark("hop", s, c.size());
  s = c.size();
  append_mass_layer(c, p, tm, ctrl);
  c.mark("mass", s, c.size());
  s = c.size();
  append_electric_block(c, p, dt, ctrl);
  c.mark("elec", s, c.size());
  s = c.size();
  append_mass_layer(c, p, tm, ctrl);
  c.mark("mass", s, c.size());
  s = c.size();
  append_hopping_block(c, p, th, order, true, ctrl);
  c.mark("hop", s, c.size());
}

// Same gate layout as a step, with the second half run backwards and no field phase, so
// the noiseless action is the identity.
inline void append_identity_step(Circuit& c, const LatticeParams& p, double dt, BondOrder order) {
  const double th = p.hopping * dt / 4.0, tm = p.mass * dt / 2.0;
  LatticeParams q = p;
  q.eps = 0.0;
  std::size_t s = c.size();
  append_hopping_block(c, p, th, order, false);
  c.mark("hop", s, c.size());
  s = c.size();
  append_mass_layer(c, p, tm);
  c.mark("mass", s, c.size());
  s = c.size();
  append_electric_block(c, q, dt);
  c.mark("elec", s, c.size());
  s = c.size();
  append_mass_layer(c, p, -tm);
  c.mark("mass", s, c.size());
  s = c.size();
  append_hopping_block(c, p, -th, order, true);
  c.mark("hop", s, c.size());
}

inline Circuit build_trotter_step(const EvolutionPlan& plan, const LatticeParams& p, int n_qubits = -1) {
  if (n_qubits < 0) n_qubits = p.n_sys();
  Circuit c(n_qubits);
  append_trotter_step(c, p, plan.dt, plan.order);
  return c;
}

inline Circuit build_evolution(const EvolutionPlan& plan, const LatticeParams& p, int n_qubits = -1) {
  plan.validate();
  if (n_qubits < 0) n_qubits = p.n_sys();
  Circuit c(n_qubits);
  for (int i = 0; i < plan.n_steps; ++i) {
    const std::size_t s = c.size();
    append_trotter_step(c, p, plan.dt, plan.order);
    c.mark("step", s, c.size());
  }
  return c;
}

inline Circuit build_identity_evolution(const EvolutionPlan& plan, const LatticeParams& p, int n_qubits = -1) {
  plan.validate();
  if (n_qubits < 0) n_qubits = p.n_sys();
  Circuit c(n_qubits);
  for (int i = 0; i < plan.n_steps; ++i) {
    const std::size_t s = c.size();
    append_identity_step(c, p, plan.dt, plan.order);
    c.mark("step", s, c.size());
  }
  return c;
}

// Every hopping and mass gate controlled on `ctrl`; in the field block only the phases.
inline Circuit build_controlled_evolution(const EvolutionPlan& plan, const LatticeParams& p, int ctrl, int n_qubits) {
  plan.validate();
  if (ctrl < p.n_sys() || ctrl >= n_qubits) throw Error("control qubit must lie outside the system register");
  Circuit c(n_qubits);
  for (int i = 0; i < plan.n_steps; ++i) {
    const std::size_t s = c.size();
    append_trotter_step(c, p, plan.dt, plan.order, ctrl);
    c.mark("step", s, c.size());
  }
  return c;
}

// ---------------------------------------------------------------------------------------
// Wave-packet creation

enum class TermOrder { Lexicographic, Canonical };

struct PrepScheme {
  int ancillas = 1;  // 1: shared ancilla with X between packets; otherwise one per packet
  int wp_trotter_steps = 1;
  double theta_cutoff = 0.0;
  int order = 1;
  TermOrder term_order = TermOrder::Lexicographic;

  void validate() const {
    if (wp_trotter_steps < 1) throw ConfigError("wave-packet trotter steps must be >= 1");
    if (theta_cutoff < 0) throw ConfigError("theta cutoff must be >= 0");
    if (order < 0) throw ConfigError("ansatz order must be >= 0");
  }
};

struct ThetaTerm {
  BareMeson meson;
  cplx coef;  // C_{m,n} times the string coefficient
  int m, n;
};

inline std::vector<ThetaTerm> theta_terms(const MesonCoefficients& c, const LatticeParams& p, TermOrder order) {
  std::vector<std::pair<int, int>> keys;
  for (const auto& [key, v] : c.entries) keys.push_back(key);  // map order is lexicographic
  if (order == TermOrder::Canonical) {
    const int N = p.n_stag();
    auto rank = [&](const std::pair<int, int>& k) {
      const int d = periodic_distance(k.first, k.second, N);
      const bool forward = (k.second - k.first + N) % N == d;
      return std::tuple(d, forward ? 0 : 1, k.first, k.second);
    };
    std::stable_sort(keys.begin(), keys.end(), [&](auto& a, auto& b) { return rank(a) < rank(b); });
  }
  std::vector<ThetaTerm> out;
  for (const auto& key : keys) {
    const cplx v = c.entries.at(key);
    for (const auto& s : meson_strings(key.first, key.second, p)) out.push_back({s, v * s.coef, key.first, key.second});
  }
  return out;
}

// exp(-i theta (|1><0|_anc (x) c M + h.c.)) for one bare string.
inline void append_theta_term(Circuit& circ, const ThetaTerm& t, double theta, int anc, const LatticeParams& p) {
  const double mag = std::abs(t.coef);
  if (mag == 0.0) return;
  const double phi = std::arg(t.coef);
  const int cs = t.meson.create, as = t.meson.annihilate;
  if (t.meson.diagonal()) {
    circ.rz(anc, -phi);
    circ.h(anc);
    circ.crz(cs, anc, 2.0 * theta * mag);
    circ.h(anc);
    circ.rz(anc, phi);
    return;
  }
  std::vector<int> flips{cs, as};
  if (t.meson.wrapped) flips.push_back(p.boson());
  std::vector<int> zs;
  for (int q = 0; q < p.n_stag(); ++q)
    if ((t.meson.zmask >> q) & 1u) zs.push_back(q);
  const double beta = theta * mag / 2.0;

  for (int q : flips) circ.cnot(anc, q);
  circ.rz(anc, -phi);
  circ.h(anc);
  for (int q : zs) circ.cnot(q, anc);
  for (int inc = 0; inc < 2; ++inc) {
    const double a = inc ? -beta : beta;
    if (inc) circ.cnot(as, anc);
    circ.rz(anc, a);
    circ.cnot(cs, anc);
    circ.rz(anc, a);
    circ.cnot(cs, anc);
    if (inc) circ.cnot(as, anc);
  }
  for (auto it = zs.rbegin(); it != zs.rend(); ++it) circ.cnot(*it, anc);
  circ.h(anc);
  circ.rz(anc, phi);
  for (auto it = flips.rbegin(); it != flips.rend(); ++it) circ.cnot(anc, *it);
}

struct QwpResult {
  Circuit circuit;
  std::vector<ThetaTerm> kept;
  std::vector<ThetaTerm> dropped;
};

// exp(-i pi/2 Theta) by a symmetric product formula with wp_trotter_steps steps; terms
// whose per-split rotation beta = theta |C| / 2 does not exceed the cutoff are dropped.
inline QwpResult build_qwp(const MesonCoefficients& c, const PrepScheme& s, int anc, const LatticeParams& p,
                           int n_qubits) {
  s.validate();
  if (anc < p.n_sys() || anc >= n_qubits) throw Error("ancilla collides with the system register");
  const double theta = kPi / (4.0 * s.wp_trotter_steps);
  QwpResult r{Circuit(n_qubits), {}, {}};
  for (const auto& t : theta_terms(c, p, s.term_order)) {
    if (std::abs(t.coef) == 0.0) continue;
    if (theta * std::abs(t.coef) / 2.0 <= s.theta_cutoff) r.dropped.push_back(t);
    else r.kept.push_back(t);
  }
  for (int step = 0; step < s.wp_trotter_steps; ++step) {
    for (const auto& t : r.kept) append_theta_term(r.circuit, t, theta, anc, p);
    for (auto it = r.kept.rbegin(); it != r.kept.rend(); ++it) append_theta_term(r.circuit, *it, theta, anc, p);
  }
  r.circuit.mark("qwp", 0, r.circuit.size());
  return r;
}

struct AcceptPattern {
  u64 mask = 0;
  u64 value = 0;
  bool accepts(u64 outcome) const { return (outcome & mask) == value; }
};

struct QinitResult {
  Circuit circuit;
  AcceptPattern accept;
  std::vector<std::vector<ThetaTerm>> kept;  // per packet
  std::vector<int> ancilla_of;               // per packet
};

inline int ancillas_needed(int n_packets, int ancilla_mode) {
  if (n_packets == 0) return 0;
  return ancilla_mode == 1 ? 1 : n_packets;
}

// Packets in order; shared-ancilla mode flips the ancilla before every later packet.
inline QinitResult build_qinit(const std::vector<MesonCoefficients>& packets, const PrepScheme& s,
                               const LatticeParams& p, int first_ancilla, int n_qubits) {
  const int need = ancillas_needed(static_cast<int>(packets.size()), s.ancillas);
  if (first_ancilla + need > n_qubits) throw Error("not enough ancilla qubits for the packet count");
  QinitResult r{Circuit(n_qubits), {}, {}, {}};
  for (std::size_t i = 0; i < packets.size(); ++i) {
    const int anc = s.ancillas == 1 ? first_ancilla : first_ancilla + static_cast<int>(i);
    if (s.ancillas == 1 && i > 0) r.circuit.x(anc);
    auto q = build_qwp(packets[i], s, anc, p, n_qubits);
    r.circuit.append(q.circuit, "packet" + std::to_string(i));
    r.kept.push_back(std::move(q.kept));
    r.ancilla_of.push_back(anc);
    r.accept.mask |= bit(anc);
    r.accept.value |= bit(anc);
  }
  return r;
}

// ---------------------------------------------------------------------------------------
// Hadamard test

enum class HadamardPart { Real, Imag };

// H on the test ancilla, controlled evolution, then H (real part) or RX(pi/2) (imaginary
// part); p0 - p1 of the ancilla gives the corresponding component of <psi|U|psi>.
inline Circuit build_hadamard_test(const EvolutionPlan& plan, const LatticeParams& p, int test_anc, int n_qubits,
                                   HadamardPart part) {
  Circuit c(n_qubits);
  c.h(test_anc);
  c.append(build_controlled_evolution(plan, p, test_anc, n_qubits), "controlled_evolution");
  if (part == HadamardPart::Real) c.h(test_anc);
  else c.rx(test_anc, kPi / 2);
  return c;
}

// ---------------------------------------------------------------------------------------
// CNOT-level view

namespace detail {

// Basis change taking letter to Z (forward) or back.
inline void to_z(Circuit& c, int q, char letter, bool forward) {
  if (letter == 'X') c.h(q);
  else if (letter == 'Y') c.rx(q, forward ? kPi / 2 : -kPi / 2);
}

// exp(-i a P/2) for a Pauli word on `qs`, optionally controlled: CNOT ladder onto the last qubit.
inline void pauli_rotation_cnot(Circuit& c, const std::vector<int>& qs, const std::string& letters, double a,
                                int ctrl, int cstate) {
  for (std::size_t i = 0; i < qs.size(); ++i) to_z(c, qs[i], letters[i], true);
  const int t = qs.back();
  for (std::size_t i = 0; i + 1 < qs.size(); ++i) c.cnot(qs[i], t);
  if (ctrl < 0) {
    c.rz(t, a);
  } else {
    c.rz(t, a / 2);
    c.cnot(ctrl, t, 1);
    c.rz(t, cstate ? -a / 2 : a / 2);
    c.cnot(ctrl, t, 1);
  }
  for (std::size_t i = qs.size() - 1; i-- > 0;) c.cnot(qs[i], t);
  for (std::size_t i = 0; i < qs.size(); ++i) to_z(c, qs[i], letters[i], false);
}

}  // namespace detail

// Rewrite into H, X, Y, Z, RX, RY, RZ and CNOT. Anti-controlled CNOTs stay as CNOTs with
// control state 0. Segment spans are remapped.
inline Circuit decompose(const Circuit& in) {
  Circuit out(in.n_qubits());
  std::vector<std::size_t> start(in.size() + 1);
  for (std::size_t gi = 0; gi < in.size(); ++gi) {
    start[gi] = out.size();
    const Gate& g = in.gates()[gi];
    const auto& q = g.qubits;
    switch (g.kind) {
      case GateKind::RZZ: detail::pauli_rotation_cnot(out, {q[0], q[1]}, "ZZ", g.angle, -1, 1); break;
      case GateKind::RXX: detail::pauli_rotation_cnot(out, {q[0], q[1]}, "XX", g.angle, -1, 1); break;
      case GateKind::RYY: detail::pauli_rotation_cnot(out, {q[0], q[1]}, "YY", g.angle, -1, 1); break;
      case GateKind::RXXX: detail::pauli_rotation_cnot(out, {q[0], q[1], q[2]}, "XXX", g.angle, -1, 1); break;
      case GateKind::RYXY: detail::pauli_rotation_cnot(out, {q[0], q[1], q[2]}, "YXY", g.angle, -1, 1); break;
      case GateKind::CRZ: detail::pauli_rotation_cnot(out, {q[1]}, "Z", g.angle, q[0], g.control_state); break;
      case GateKind::CRXX: detail::pauli_rotation_cnot(out, {q[1], q[2]}, "XX", g.angle, q[0], g.control_state); break;
      case GateKind::CRYY: detail::pauli_rotation_cnot(out, {q[1], q[2]}, "YY", g.angle, q[0], g.control_state); break;
      case GateKind::CRXXX:
        detail::pauli_rotation_cnot(out, {q[1], q[2], q[3]}, "XXX", g.angle, q[0], g.control_state);
        break;
      case GateKind::CRYXY:
        detail::pauli_rotation_cnot(out, {q[1], q[2], q[3]}, "YXY", g.angle, q[0], g.control_state);
        break;
      default: out.add(g);
    }
  }
  start[in.size()] = out.size();
  for (const auto& s : in.segments()) out.mark(s.name, start[s.begin], start[s.end]);
  return out;
}

struct GateCounts {
  std::size_t single_qubit = 0;
  std::size_t cnot = 0;
  friend bool operator==(const GateCounts&, const GateCounts&) = default;
};

inline GateCounts count_gates(const Circuit& c) {
  GateCounts n;
  const Circuit d = decompose(c);
  for (const auto& g : d.gates()) {
    if (g.kind == GateKind::CNOT) ++n.cnot;
    else ++n.single_qubit;
  }
  return n;
}

// Closed-form CNOT counts.
inline std::size_t qgs_cnot_formula(int np) { return static_cast<std::size_t>(8 * np + 4); }
inline std::size_t trotter_cnot_formula(int np) { return static_cast<std::size_t>(18 * np + 8); }
inline std::size_t qwp_cnot_formula(int np, int j, int steps) {
  return static_cast<std::size_t>((4 * (j * j + 9 * j + 1) * np + 2 * j * j + 2 * j) * 2 * steps);
}

// Replace each CNOT inside every span named `segment` by a random Pauli-conjugated
// equivalent.
inline Circuit pauli_twirl(const Circuit& c, const std::string& segment, std::uint64_t seed) {
  if (!c.find_segment(segment)) throw Error("no segment named '" + segment + "'");
  std::vector<char> inside(c.size(), 0);
  for (const auto& sg : c.segments())
    if (sg.name == segment) std::fill(inside.begin() + static_cast<std::ptrdiff_t>(sg.begin),
                                      inside.begin() + static_cast<std::ptrdiff_t>(sg.end), 1);
  // {before_control, before_target, after_control, after_target}
  static constexpr char kVariants[4][4] = {
      {'I', 'I', 'I', 'I'}, {'Z', 'I', 'Z', 'I'}, {'X', 'X', 'X', 'I'}, {'Y', 'Z', 'X', 'Y'}};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 3);
  Circuit out(c.n_qubits());
  std::vector<std::size_t> start(c.size() + 1);
  auto pauli = [&](char l, int q) {
    if (l == 'X') out.x(q);
    else if (l == 'Y') out.y(q);
    else if (l == 'Z') out.z(q);
  };
  for (std::size_t gi = 0; gi < c.size(); ++gi) {
    start[gi] = out.size();
    const Gate& g = c.gates()[gi];
    if (g.kind != GateKind::CNOT || !inside[gi]) {
      out.add(g);
      continue;
    }
    const auto& v = kVariants[pick(rng)];
    pauli(v[0], g.qubits[0]);
    pauli(v[1], g.qubits[1]);
    out.add(g);
    pauli(v[2], g.qubits[0]);
    pauli(v[3], g.qubits[1]);
  }
  start[c.size()] = out.size();
  for (const auto& s : c.segments()) out.mark(s.name, start[s.begin], start[s.end]);
  return out;
}

}  // namespace z2h
