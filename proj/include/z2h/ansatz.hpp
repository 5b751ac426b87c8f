#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "z2h/model.hpp"

namespace z2h {

// Free staggered-fermion kinematics over the physical zone.
class KinematicTable {
 public:
  explicit KinematicTable(const LatticeParams& p) : p_(p), ks_(brillouin_zone(p)) {
    if (p.mass < 0) throw ConfigError("mass must be >= 0");
    for (double k : ks_) {
      const double w = std::sqrt(p.mass * p.mass + std::sin(k) * std::sin(k));
      if (w < 1e-14) throw Error("singular kinematics: omega vanishes at k = " + std::to_string(k));
      omega_.push_back(w);
      v_.push_back(std::sin(k) / (p.mass + w));
    }
  }

  const LatticeParams& params() const { return p_; }
  const std::vector<double>& momenta() const { return ks_; }
  std::size_t size() const { return ks_.size(); }
  double omega(std::size_t i) const { return omega_[i]; }
  double v(std::size_t i) const { return v_[i]; }

  // Particle and antiparticle plane-wave factors at zone index i and site s.
  cplx cfac(std::size_t i, int s) const {
    const double pref = std::sqrt((p_.mass + omega_[i]) / (2 * kPi * omega_[i]));
    const double proj = (s % 2 == 0) ? 1.0 : v_[i];
    return pref * std::exp(kI * (ks_[i] * s)) * proj;
  }
  cplx dfac(std::size_t i, int s) const {
    const double pref = std::sqrt((p_.mass + omega_[i]) / (2 * kPi * omega_[i]));
    const double proj = (s % 2 == 0) ? -v_[i] : 1.0;
    return pref * std::exp(kI * (ks_[i] * s)) * proj;
  }

 private:
  LatticeParams p_;
  std::vector<double> ks_;
  std::vector<double> omega_, v_;
};

inline int periodic_distance(int m, int n, int N) {
  const int d = std::abs(m - n);
  return std::min(d, N - d);
}

// One Jordan-Wigner string of a bare meson: coef * Z_zmask * sigma^-_create sigma^+_annihilate
// (* X on the boson when wrapped). Diagonal mesons (create == annihilate) are number operators.
struct BareMeson {
  int create = 0;
  int annihilate = 0;
  u64 zmask = 0;
  bool wrapped = false;
  double coef = 1.0;

  bool diagonal() const { return create == annihilate; }
};

inline std::vector<BareMeson> meson_strings(int m, int n, const LatticeParams& p) {
  const int N = p.n_stag(), np = p.n_phys;
  if (m < 0 || m >= N || n < 0 || n >= N) throw Error("meson site out of range");
  if (m == n) return {BareMeson{m, n, 0, false, 1.0}};
  const int lo = std::min(m, n), hi = std::max(m, n);
  auto range_mask = [](int a, int b) {  // qubits a..b-1
    u64 r = 0;
    for (int q = a; q < b; ++q) r |= bit(q);
    return r;
  };
  const double sgn_np = (np % 2 == 0) ? 1.0 : -1.0;  // (-1)^{N_P}
  BareMeson shrt{m, n, range_mask(lo + 1, hi), false, m < n ? 1.0 : -1.0};
  BareMeson lng{m, n, range_mask(0, lo) | range_mask(hi + 1, N), true, m < n ? sgn_np : -sgn_np};
  const int a = hi - lo;
  if (a < np) return {shrt};
  if (a > np) return {lng};
  shrt.coef /= std::sqrt(2.0);
  lng.coef /= std::sqrt(2.0);
  return {shrt, lng};
}

inline PauliSum bare_meson_operator(const BareMeson& b, const LatticeParams& p) {
  const int nq = p.n_sys();
  if (b.diagonal()) return number_op(nq, b.create) * cplx{b.coef};
  PauliWord w;
  w.z = b.zmask;
  if (b.wrapped) w.set(p.boson(), 'X');
  const PauliSum string(nq, {{b.coef, w}});
  return sigma_minus(nq, b.create) * sigma_plus(nq, b.annihilate) * string;
}

inline PauliSum meson_operator(int m, int n, const LatticeParams& p) {
  PauliSum s(p.n_sys());
  for (const auto& b : meson_strings(m, n, p)) s += bare_meson_operator(b, p);
  return s.simplified();
}

enum class DeltaMode { Strict, ModPi };

using CoeffMap = std::map<std::pair<int, int>, cplx>;

// Bare coefficients for the meson of momentum index ik, summed over the pairs (p, q)
// with p + q = k.
inline CoeffMap bare_coefficients(std::size_t ik, const KinematicTable& t, DeltaMode mode = DeltaMode::Strict) {
  const auto& ks = t.momenta();
  const int N = t.params().n_stag();
  const double k = ks.at(ik);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < ks.size(); ++a)
    for (std::size_t b = 0; b < ks.size(); ++b) {
      const double d = ks[a] + ks[b] - k;
      const bool hit = mode == DeltaMode::Strict ? std::abs(d) < 1e-9
                                                 : std::abs(d / kPi - std::round(d / kPi)) < 1e-9;
      if (hit) pairs.emplace_back(a, b);
    }
  CoeffMap out;
  for (int m = 0; m < N; ++m)
    for (int n = 0; n < N; ++n) {
      cplx s = 0;
      for (auto [a, b] : pairs) s += t.cfac(a, m) * t.dfac(b, n);
      out[{m, n}] = s;
    }
  return out;
}

// Length-suppression parameters per momentum label and order: alpha(label, d, parity).
class AnsatzParams {
 public:
  AnsatzParams() = default;
  explicit AnsatzParams(int order) : order_(order) {}

  int order() const { return order_; }
  void set_order(int j) { order_ = j; }

  void set(int label, int d, int parity, double value) {
    if (d < 1 || parity < 0 || parity > 1) throw Error("bad ansatz parameter index");
    auto& v = table_[label];
    if (static_cast<int>(v.size()) < d) v.resize(static_cast<std::size_t>(d), {kNaN, kNaN});
    v[static_cast<std::size_t>(d - 1)][static_cast<std::size_t>(parity)] = value;
  }

  std::optional<double> get(int label, int d, int parity) const {
    auto it = table_.find(label);
    if (it == table_.end() || static_cast<int>(it->second.size()) < d) return std::nullopt;
    const double v = it->second[static_cast<std::size_t>(d - 1)][static_cast<std::size_t>(parity)];
    if (std::isnan(v)) return std::nullopt;
    return v;
  }

  double at(int label, int d, int parity) const {
    auto v = get(label, d, parity);
    if (!v)
      throw Error("missing ansatz parameter for label " + std::to_string(label) + ", length " +
                  std::to_string(d) + ", parity " + std::to_string(parity));
    return *v;
  }

  bool complete(int label, int j) const {
    for (int d = 1; d <= j; ++d)
      for (int i = 0; i < 2; ++i)
        if (!get(label, d, i)) return false;
    return true;
  }

  const std::map<int, std::vector<std::array<double, 2>>>& table() const { return table_; }

 private:
  static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  int order_ = 1;
  std::map<int, std::vector<std::array<double, 2>>> table_;
};

struct MesonCoefficients {
  CoeffMap entries;
  int order = 0;
  double normalization = 1.0;

  double norm2() const {
    double s = 0;
    for (const auto& [key, c] : entries) s += std::norm(c);
    return s;
  }
};

// Order-j coefficients for momentum index ik, jointly normalized over all stored entries.
inline MesonCoefficients order_j_coefficients(std::size_t ik, int j, const AnsatzParams& ap, const KinematicTable& t,
                                              DeltaMode mode = DeltaMode::Strict) {
  const int N = t.params().n_stag();
  const int label = momentum_labels(t.params().n_phys).at(ik);
  if (j > 0 && !ap.complete(label, std::min(j, N / 2)))
    throw Error("ansatz parameters incomplete through order " + std::to_string(j) + " for label " +
                std::to_string(label));
  const CoeffMap bare = bare_coefficients(ik, t, mode);
  MesonCoefficients out;
  out.order = j;
  for (const auto& [key, c] : bare) {
    const int d = periodic_distance(key.first, key.second, N);
    if (d > j) continue;
    if (d == 0) {
      out.entries[key] = c;
    } else {
      const double a = ap.at(label, d, key.first % 2);
      out.entries[key] = std::exp(-a * d * d) * c;
    }
  }
  const double nrm = std::sqrt(out.norm2());
  if (nrm < 1e-300) throw Error("ansatz coefficients vanish identically");
  for (auto& [key, c] : out.entries) c /= nrm;
  out.normalization = nrm;
  return out;
}

struct WavePacketProfile {
  double mu = 0;
  double sigma = 1;
  double kbar = 0;
  std::vector<cplx> values;  // over the zone, ascending momentum
  double norm_const = 1;
};

inline WavePacketProfile gaussian_profile(double mu, double sigma, double kbar, const LatticeParams& p) {
  if (!(sigma > 0)) throw ConfigError("wave packet sigma must be > 0");
  WavePacketProfile w{mu, sigma, kbar, {}, 1.0};
  double s = 0;
  for (double k : brillouin_zone(p)) {
    const cplx v = std::exp(-kI * (k * mu)) * std::exp(-(k - kbar) * (k - kbar) / (4 * sigma * sigma));
    w.values.push_back(v);
    s += std::norm(v);
  }
  w.norm_const = 1.0 / std::sqrt(s);
  for (auto& v : w.values) v *= w.norm_const;
  return w;
}

// Single-momentum profile selecting zone index ik.
inline WavePacketProfile delta_profile(std::size_t ik, const LatticeParams& p) {
  const auto ks = brillouin_zone(p);
  WavePacketProfile w{0, 0, ks.at(ik), std::vector<cplx>(ks.size()), 1.0};
  w.values[ik] = 1.0;
  return w;
}

inline cplx profile_overlap(const WavePacketProfile& a, const WavePacketProfile& b) {
  if (a.values.size() != b.values.size()) throw Error("profile overlap: zone mismatch");
  cplx s = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += std::conj(a.values[i]) * b.values[i];
  return s;
}

inline MesonCoefficients wavepacket_coefficients(const WavePacketProfile& w, const AnsatzParams& ap,
                                                 const KinematicTable& t, DeltaMode mode = DeltaMode::Strict) {
  if (w.values.size() != t.size()) throw Error("wave packet zone mismatch");
  MesonCoefficients out;
  out.order = ap.order();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (std::abs(w.values[i]) <= 1e-12) continue;
    const auto ck = order_j_coefficients(i, ap.order(), ap, t, mode);
    for (const auto& [key, c] : ck.entries) out.entries[key] += w.values[i] * c;
  }
  return out;
}

// Sum_{m,n} C_{m,n} M_{m,n}.
inline PauliSum creation_operator(const MesonCoefficients& c, const LatticeParams& p) {
  PauliSum s(p.n_sys());
  for (const auto& [key, v] : c.entries) s += meson_operator(key.first, key.second, p) * v;
  return s.simplified(1e-15);
}

}  // namespace z2h
