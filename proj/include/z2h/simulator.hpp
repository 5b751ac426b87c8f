#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "z2h/pauli.hpp"
#include "z2h/types.hpp"

namespace z2h {

enum class GateKind {
  H, X, Y, Z,
  RX, RY, RZ,
  RXX, RYY, RZZ, RXXX, RYXY,
  CNOT,
  CRZ, CRXX, CRYY, CRXXX, CRYXY,
};

inline constexpr std::string_view gate_name(GateKind k) {
  switch (k) {
    case GateKind::H: return "H";
    case GateKind::X: return "X";
    case GateKind::Y: return "Y";
    case GateKind::Z: return "Z";
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::RXX: return "RXX";
    case GateKind::RYY: return "RYY";
    case GateKind::RZZ: return "RZZ";
    case GateKind::RXXX: return "R_XXX";
    case GateKind::RYXY: return "R_YXY";
    case GateKind::CNOT: return "CNOT";
    case GateKind::CRZ: return "CRZ";
    case GateKind::CRXX: return "CRXX";
    case GateKind::CRYY: return "CRYY";
    case GateKind::CRXXX: return "CR_XXX";
    case GateKind::CRYXY: return "CR_YXY";
  }
  return "?";
}

inline bool is_controlled(GateKind k) {
  switch (k) {
    case GateKind::CNOT: case GateKind::CRZ: case GateKind::CRXX:
    case GateKind::CRYY: case GateKind::CRXXX: case GateKind::CRYXY:
      return true;
    default:
      return false;
  }
}

inline bool has_angle(GateKind k) {
  switch (k) {
    case GateKind::H: case GateKind::X: case GateKind::Y: case GateKind::Z: case GateKind::CNOT:
      return false;
    default:
      return true;
  }
}

inline int gate_arity(GateKind k) {
  switch (k) {
    case GateKind::H: case GateKind::X: case GateKind::Y: case GateKind::Z:
    case GateKind::RX: case GateKind::RY: case GateKind::RZ:
      return 1;
    case GateKind::RXX: case GateKind::RYY: case GateKind::RZZ: case GateKind::CNOT: case GateKind::CRZ:
      return 2;
    case GateKind::RXXX: case GateKind::RYXY: case GateKind::CRXX: case GateKind::CRYY:
      return 3;
    case GateKind::CRXXX: case GateKind::CRYXY:
      return 4;
  }
  return 0;
}

// Controlled gates store the control first. Rotations are exp(-i angle P / 2).
struct Gate {
  GateKind kind;
  std::vector<int> qubits;
  double angle = 0.0;
  int control_state = 1;

  // Pauli generator of a rotation (target qubits only).
  PauliWord generator() const {
    PauliWord w;
    const int off = is_controlled(kind) ? 1 : 0;
    auto q = [&](int i) { return qubits[static_cast<std::size_t>(i + off)]; };
    switch (kind) {
      case GateKind::RX: w.set(q(0), 'X'); break;
      case GateKind::RY: w.set(q(0), 'Y'); break;
      case GateKind::RZ: case GateKind::CRZ: w.set(q(0), 'Z'); break;
      case GateKind::RXX: case GateKind::CRXX: w.set(q(0), 'X'); w.set(q(1), 'X'); break;
      case GateKind::RYY: case GateKind::CRYY: w.set(q(0), 'Y'); w.set(q(1), 'Y'); break;
      case GateKind::RZZ: w.set(q(0), 'Z'); w.set(q(1), 'Z'); break;
      case GateKind::RXXX: case GateKind::CRXXX: w.set(q(0), 'X'); w.set(q(1), 'X'); w.set(q(2), 'X'); break;
      case GateKind::RYXY: case GateKind::CRYXY: w.set(q(0), 'Y'); w.set(q(1), 'X'); w.set(q(2), 'Y'); break;
      default: throw Error("gate has no rotation generator");
    }
    return w;
  }

  std::string str() const {
    std::string s(gate_name(kind));
    s += ' ';
    for (std::size_t i = 0; i < qubits.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(qubits[i]);
    }
    if (has_angle(kind)) {
      char buf[40];
      std::snprintf(buf, sizeof buf, " %.17g", angle);
      s += buf;
    }
    if (is_controlled(kind)) s += ' ' + std::to_string(control_state);
    return s;
  }
};

struct Segment {
  std::string name;
  std::size_t begin;
  std::size_t end;
};

class Circuit {
 public:
  Circuit() = default;
  explicit Circuit(int n_qubits) : n_(n_qubits) {}

  int n_qubits() const { return n_; }
  const std::vector<Gate>& gates() const { return gates_; }
  std::vector<Gate>& gates() { return gates_; }
  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t size() const { return gates_.size(); }
  bool empty() const { return gates_.empty(); }

  void add(Gate g) {
    if (static_cast<int>(g.qubits.size()) != gate_arity(g.kind))
      throw Error(std::string("wrong qubit count for ") + std::string(gate_name(g.kind)));
    for (std::size_t i = 0; i < g.qubits.size(); ++i) {
      if (g.qubits[i] < 0 || g.qubits[i] >= n_) throw Error("gate qubit index out of range");
      for (std::size_t j = 0; j < i; ++j)
        if (g.qubits[i] == g.qubits[j]) throw Error("gate qubits must be distinct");
    }
    if (g.control_state != 0 && g.control_state != 1) throw Error("control state must be 0 or 1");
    gates_.push_back(std::move(g));
  }

  void h(int q) { add({GateKind::H, {q}}); }
  void x(int q) { add({GateKind::X, {q}}); }
  void y(int q) { add({GateKind::Y, {q}}); }
  void z(int q) { add({GateKind::Z, {q}}); }
  void rx(int q, double a) { add({GateKind::RX, {q}, a}); }
  void ry(int q, double a) { add({GateKind::RY, {q}, a}); }
  void rz(int q, double a) { add({GateKind::RZ, {q}, a}); }
  void cnot(int c, int t, int state = 1) { add({GateKind::CNOT, {c, t}, 0.0, state}); }
  void crz(int c, int t, double a, int state = 1) { add({GateKind::CRZ, {c, t}, a, state}); }

  // Append another circuit, carrying over its segments.
  void append(const Circuit& o) {
    if (o.n_ > n_) throw Error("append: circuit wider than target");
    const std::size_t off = gates_.size();
    for (const auto& g : o.gates_) add(g);
    for (const auto& s : o.segments_) segments_.push_back({s.name, s.begin + off, s.end + off});
  }

  // Append with a named segment covering the appended gates.
  void append(const Circuit& o, const std::string& name) {
    const std::size_t b = gates_.size();
    append(o);
    segments_.push_back({name, b, gates_.size()});
  }

  void mark(const std::string& name, std::size_t begin, std::size_t end) { segments_.push_back({name, begin, end}); }

  const Segment* find_segment(const std::string& name) const {
    for (const auto& s : segments_)
      if (s.name == name) return &s;
    return nullptr;
  }

  std::string dump() const {
    std::string s;
    for (const auto& g : gates_) s += g.str() + '\n';
    return s;
  }

  static Circuit parse(const std::string& text, int n_qubits) {
    static const std::map<std::string, GateKind> kinds = [] {
      std::map<std::string, GateKind> m;
      for (int i = 0; i <= static_cast<int>(GateKind::CRYXY); ++i) {
        const auto k = static_cast<GateKind>(i);
        m[std::string(gate_name(k))] = k;
      }
      return m;
    }();
    Circuit c(n_qubits);
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string name, qs;
      ls >> name >> qs;
      auto it = kinds.find(name);
      if (it == kinds.end()) throw Error("unknown gate kind '" + name + "'");
      Gate g{it->second, {}};
      std::istringstream qss(qs);
      for (std::string tok; std::getline(qss, tok, ',');) g.qubits.push_back(std::stoi(tok));
      if (has_angle(g.kind)) ls >> g.angle;
      if (is_controlled(g.kind)) ls >> g.control_state;
      c.add(std::move(g));
    }
    return c;
  }

 private:
  int n_ = 0;
  std::vector<Gate> gates_;
  std::vector<Segment> segments_;
};

class Statevector {
 public:
  Statevector() = default;
  explicit Statevector(int n_qubits, u64 basis_index = 0) : n_(n_qubits), amp_(std::size_t{1} << n_qubits) {
    if (n_qubits > 30) throw ResourceError("statevector of " + std::to_string(n_qubits) + " qubits exceeds the limit");
    amp_.at(basis_index) = 1.0;
  }
  Statevector(int n_qubits, std::vector<cplx> amps) : n_(n_qubits), amp_(std::move(amps)) {
    if (amp_.size() != (std::size_t{1} << n_qubits)) throw Error("amplitude count does not match width");
  }

  int n_qubits() const { return n_; }
  std::size_t dim() const { return amp_.size(); }
  const std::vector<cplx>& amplitudes() const { return amp_; }
  std::vector<cplx>& amplitudes() { return amp_; }
  cplx operator[](std::size_t i) const { return amp_[i]; }

  double norm() const {
    double s = 0;
    for (const auto& a : amp_) s += std::norm(a);
    return std::sqrt(s);
  }

  void normalize() {
    const double n = norm();
    if (n == 0) throw Error("cannot normalize a zero state");
    for (auto& a : amp_) a /= n;
  }

  // exp(-i theta P / 2), optionally conditioned on qubit `ctrl` being `cstate`.
  void pauli_rotation(const PauliWord& w, double theta, int ctrl = -1, int cstate = 1) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    const cplx base = ipow(popcount(w.x & w.z));
    const u64 cm = ctrl >= 0 ? bit(ctrl) : 0, cv = (ctrl >= 0 && cstate) ? cm : 0;
    const u64 dim = amp_.size();
    if (w.x == 0) {
      const cplx even(c, -s), odd(c, s);
      for (u64 b = 0; b < dim; ++b) {
        if ((b & cm) != cv) continue;
        amp_[b] *= (popcount(b & w.z) & 1) ? odd : even;
      }
      return;
    }
    const int pivot = 63 - __builtin_clzll(w.x);
    const cplx mis(0, -s);
    for (u64 b = 0; b < dim; ++b) {
      if ((b >> pivot) & 1u) continue;
      if ((b & cm) != cv) continue;
      const u64 b2 = b ^ w.x;
      const cplx p1 = (popcount(b & w.z) & 1) ? -base : base;    // P|b> = p1 |b2>
      const cplx p2 = (popcount(b2 & w.z) & 1) ? -base : base;   // P|b2> = p2 |b>
      const cplx a1 = amp_[b], a2 = amp_[b2];
      amp_[b] = c * a1 + mis * p2 * a2;
      amp_[b2] = c * a2 + mis * p1 * a1;
    }
  }

  // Multiply by a Pauli word (no control).
  void apply_pauli(const PauliWord& w) {
    const cplx base = ipow(popcount(w.x & w.z));
    const u64 dim = amp_.size();
    if (w.x == 0) {
      for (u64 b = 0; b < dim; ++b)
        if (popcount(b & w.z) & 1) amp_[b] = -amp_[b];
      if (base != cplx{1.0}) for (auto& a : amp_) a *= base;
      return;
    }
    const int pivot = 63 - __builtin_clzll(w.x);
    for (u64 b = 0; b < dim; ++b) {
      if ((b >> pivot) & 1u) continue;
      const u64 b2 = b ^ w.x;
      const cplx p1 = (popcount(b & w.z) & 1) ? -base : base;
      const cplx p2 = (popcount(b2 & w.z) & 1) ? -base : base;
      const cplx a1 = amp_[b], a2 = amp_[b2];
      amp_[b2] = p1 * a1;
      amp_[b] = p2 * a2;
    }
  }

  // Applies [[m00, m01], [m10, m11]] to qubit t on the subspace where (b & cm) == cv.
  void apply_1q(int t, cplx m00, cplx m01, cplx m10, cplx m11, u64 cm = 0, u64 cv = 0) {
    const u64 tm = bit(t), dim = amp_.size();
    for (u64 hi = 0; hi < dim; hi += 2 * tm)
      for (u64 b = hi; b < hi + tm; ++b) {
        if ((b & cm) != cv) continue;
        const cplx a0 = amp_[b], a1 = amp_[b | tm];
        amp_[b] = m00 * a0 + m01 * a1;
        amp_[b | tm] = m10 * a0 + m11 * a1;
      }
  }

  void apply(const Gate& g) {
    const auto& q = g.qubits;
    const double c = std::cos(g.angle / 2), s = std::sin(g.angle / 2);
    switch (g.kind) {
      case GateKind::H: {
        const double r = 1.0 / std::sqrt(2.0);
        apply_1q(q[0], r, r, r, -r);
        return;
      }
      case GateKind::X: apply_1q(q[0], 0, 1, 1, 0); return;
      case GateKind::Y: apply_1q(q[0], 0, cplx(0, -1), cplx(0, 1), 0); return;
      case GateKind::Z: apply_1q(q[0], 1, 0, 0, -1); return;
      case GateKind::RX: apply_1q(q[0], c, cplx(0, -s), cplx(0, -s), c); return;
      case GateKind::RY: apply_1q(q[0], c, -s, s, c); return;
      case GateKind::RZ: apply_1q(q[0], cplx(c, -s), 0, 0, cplx(c, s)); return;
      case GateKind::CNOT: {
        const u64 cm = bit(q[0]), tm = bit(q[1]), cv = g.control_state ? cm : 0, dim = amp_.size();
        for (u64 hi = 0; hi < dim; hi += 2 * tm)
          for (u64 b = hi; b < hi + tm; ++b)
            if ((b & cm) == cv) std::swap(amp_[b], amp_[b | tm]);
        return;
      }
      default:
        if (is_controlled(g.kind))
          pauli_rotation(g.generator(), g.angle, q[0], g.control_state);
        else
          pauli_rotation(g.generator(), g.angle);
    }
  }

  // Probability that qubit q reads 1.
  double prob_one(int q) const {
    double s = 0;
    for (u64 b = 0; b < amp_.size(); ++b)
      if ((b >> q) & 1u) s += std::norm(amp_[b]);
    return s;
  }

  cplx inner(const Statevector& o) const {
    if (o.dim() != dim()) throw Error("inner product: dimension mismatch");
    cplx s = 0;
    for (std::size_t i = 0; i < amp_.size(); ++i) s += std::conj(amp_[i]) * o.amp_[i];
    return s;
  }

 private:
  int n_ = 0;
  std::vector<cplx> amp_;
};

inline Statevector run(const Circuit& c, Statevector s) {
  if (c.n_qubits() != s.n_qubits()) throw Error("run: circuit and state widths differ");
  for (const auto& g : c.gates()) s.apply(g);
  return s;
}

struct ExpectationResult {
  double value;
  double imag_residue;
};

inline ExpectationResult expectation_detail(const Statevector& s, const PauliSum& obs) {
  if (!obs.is_hermitian()) throw Error("expectation of a non-Hermitian observable");
  std::vector<cplx> out(s.dim());
  obs.apply_add(s.amplitudes(), out);
  cplx v = 0;
  for (std::size_t i = 0; i < out.size(); ++i) v += std::conj(s[i]) * out[i];
  return {v.real(), v.imag()};
}

inline double expectation(const Statevector& s, const PauliSum& obs) { return expectation_detail(s, obs).value; }

struct ShotCounts {
  std::map<u64, std::uint64_t> counts;
  std::uint64_t total = 0;
  std::uint64_t seed = 0;
  int n_qubits = 0;

  void add(u64 outcome, std::uint64_t n = 1) {
    if (n == 0) return;
    counts[outcome] += n;
    total += n;
  }
};

// Multinomial draw from |amplitude|^2 as a chain of conditional binomials.
inline ShotCounts sample_probabilities(const std::vector<double>& probs, std::uint64_t shots, std::mt19937_64& rng) {
  ShotCounts sc;
  double rest = 0;
  for (double p : probs) rest += p;
  std::uint64_t left = shots;
  for (std::size_t i = 0; i < probs.size() && left > 0; ++i) {
    if (probs[i] <= 0) continue;
    const double q = std::clamp(probs[i] / rest, 0.0, 1.0);
    std::uint64_t k = left;
    if (q < 1.0) {
      std::binomial_distribution<std::uint64_t> bd(left, q);
      k = bd(rng);
    }
    sc.add(i, k);
    left -= k;
    rest -= probs[i];
    if (rest <= 0) rest = 0;
  }
  if (left > 0) {  // rounding residue lands on the last populated outcome
    for (std::size_t i = probs.size(); i-- > 0;)
      if (probs[i] > 0) {
        sc.add(i, left);
        break;
      }
  }
  return sc;
}

inline std::vector<double> probabilities(const Statevector& s) {
  std::vector<double> p(s.dim());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(s[i]);
  return p;
}

inline ShotCounts sample(const Statevector& s, std::uint64_t shots, std::uint64_t seed) {
  if (shots < 1) throw Error("shots must be >= 1");
  std::mt19937_64 rng(seed);
  auto sc = sample_probabilities(probabilities(s), shots, rng);
  sc.seed = seed;
  sc.n_qubits = s.n_qubits();
  return sc;
}

inline u64 sample_one(const Statevector& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng), acc = 0;
  for (std::size_t i = 0; i < s.dim(); ++i) {
    acc += std::norm(s[i]);
    if (r < acc) return i;
  }
  for (std::size_t i = s.dim(); i-- > 0;)
    if (std::norm(s[i]) > 0) return i;
  return 0;
}

struct NoiseModel {
  double p1 = 0.0;
  double p2 = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (p1 < 0 || p1 > 1 || p2 < 0 || p2 > 1) throw ConfigError("noise probabilities must lie in [0, 1]");
  }
};

struct TrajectoryLog {
  std::uint64_t injections = 0;
  std::uint64_t xy_injections = 0;  // injected Paulis with an X or Y letter
};

struct NoisyRun {
  std::vector<ShotCounts> checkpoints;  // one sample per trajectory at each checkpoint
  std::vector<TrajectoryLog> logs;       // per trajectory
};

inline std::mt19937_64 trajectory_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

// One stochastic trajectory. After each gate a uniformly random non-identity Pauli on the
// gate's qubits is injected with probability p1 (one-qubit gates) or p2 (wider gates).
// The state is measured once after the gates listed in `checkpoints` (gate counts).
inline void run_trajectory(const Circuit& c, const Statevector& init, const NoiseModel& nm,
                           const std::vector<std::size_t>& checkpoints, std::mt19937_64& rng,
                           std::vector<u64>& outcomes, TrajectoryLog& log) {
  Statevector s = init;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t next = 0;
  outcomes.clear();
  auto measure_due = [&](std::size_t done) {
    while (next < checkpoints.size() && checkpoints[next] == done) {
      outcomes.push_back(sample_one(s, rng));
      ++next;
    }
  };
  measure_due(0);
  const auto& gates = c.gates();
  for (std::size_t gi = 0; gi < gates.size(); ++gi) {
    const Gate& g = gates[gi];
    s.apply(g);
    const int arity = gate_arity(g.kind);
    const double p = arity == 1 ? nm.p1 : nm.p2;
    if (p > 0 && u(rng) < p) {
      const u64 choices = (u64{1} << (2 * arity)) - 1;
      std::uniform_int_distribution<u64> pick(1, choices);
      const u64 r = pick(rng);
      PauliWord w;
      for (int i = 0; i < arity; ++i) {
        const int letter = static_cast<int>((r >> (2 * i)) & 3u);
        w.set(g.qubits[static_cast<std::size_t>(i)], "IXYZ"[letter]);
      }
      s.apply_pauli(w);
      ++log.injections;
      if (w.x) ++log.xy_injections;
    }
    measure_due(gi + 1);
  }
}

inline NoisyRun run_noisy(const Circuit& c, const Statevector& init, const NoiseModel& nm, std::uint64_t trajectories,
                          std::vector<std::size_t> checkpoints = {}) {
  nm.validate();
  if (trajectories < 1) throw Error("trajectories must be >= 1");
  if (checkpoints.empty()) checkpoints.push_back(c.size());
  std::sort(checkpoints.begin(), checkpoints.end());
  for (auto cp : checkpoints)
    if (cp > c.size()) throw Error("checkpoint beyond the end of the circuit");
  NoisyRun out;
  out.checkpoints.resize(checkpoints.size());
  for (auto& sc : out.checkpoints) {
    sc.seed = nm.seed;
    sc.n_qubits = c.n_qubits();
  }
  std::vector<u64> outcomes;
  for (std::uint64_t t = 0; t < trajectories; ++t) {
    auto rng = trajectory_rng(nm.seed, t);
    TrajectoryLog log;
    run_trajectory(c, init, nm, checkpoints, rng, outcomes, log);
    for (std::size_t i = 0; i < outcomes.size(); ++i) out.checkpoints[i].add(outcomes[i]);
    out.logs.push_back(log);
  }
  return out;
}

}  // namespace z2h
