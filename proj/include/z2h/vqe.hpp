#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "z2h/ansatz.hpp"
#include "z2h/circuits.hpp"
#include "z2h/ed.hpp"
#include "z2h/simulator.hpp"

namespace z2h {

struct Box {
  std::vector<double> lo, hi;

  std::size_t dim() const { return lo.size(); }
  void clamp(std::vector<double>& x) const {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
  }
};

struct OptimizeReport {
  std::vector<double> best_params;
  double best_energy = 0.0;
  std::size_t evaluations = 0;
  std::vector<double> trace;  // best value after each simplex iteration
  Box window_used;
};

struct NelderMeadOptions {
  int restarts = 8;
  double ftol = 1e-8;
  std::size_t max_iter = 4000;
  double initial_step = 0.1;  // relative to the box width
  std::uint64_t seed = 7;
};

namespace detail {

struct SimplexResult {
  std::vector<double> x;
  double f;
};

inline SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                                 const Box& box, const NelderMeadOptions& o, std::size_t& evals,
                                 std::vector<double>& trace) {
  const std::size_t n = x0.size();
  box.clamp(x0);
  std::vector<std::vector<double>> pts{x0};
  for (std::size_t i = 0; i < n; ++i) {
    auto p = x0;
    const double step = o.initial_step * (box.hi[i] - box.lo[i]);
    p[i] += (p[i] + step <= box.hi[i]) ? step : -step;
    box.clamp(p);
    pts.push_back(p);
  }
  std::vector<double> fv;
  auto eval = [&](std::vector<double> p) {
    box.clamp(p);
    ++evals;
    return std::pair(f(p), p);
  };
  for (auto& p : pts) fv.push_back(eval(p).first);
  std::vector<std::size_t> idx(n + 1);
  for (std::size_t it = 0; it < o.max_iter; ++it) {
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
    trace.push_back(fv[idx[0]]);
    if (fv[idx[n]] - fv[idx[0]] < o.ftol) break;
    std::vector<double> cen(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t d = 0; d < n; ++d) cen[d] += pts[idx[k]][d] / static_cast<double>(n);
    auto along = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t d = 0; d < n; ++d) p[d] = cen[d] + t * (pts[idx[n]][d] - cen[d]);
      return eval(p);
    };
    auto [fr, xr] = along(-1.0);
    if (fr < fv[idx[0]]) {
      auto [fe, xe] = along(-2.0);
      if (fe < fr) { pts[idx[n]] = xe; fv[idx[n]] = fe; }
      else { pts[idx[n]] = xr; fv[idx[n]] = fr; }
    } else if (fr < fv[idx[n - 1]]) {
      pts[idx[n]] = xr;
      fv[idx[n]] = fr;
    } else {
      auto [fc, xc] = fr < fv[idx[n]] ? along(-0.5) : along(0.5);
      if (fc < std::min(fr, fv[idx[n]])) {
        pts[idx[n]] = xc;
        fv[idx[n]] = fc;
      } else {
        for (std::size_t k = 1; k <= n; ++k) {
          std::vector<double> p(n);
          for (std::size_t d = 0; d < n; ++d) p[d] = pts[idx[0]][d] + 0.5 * (pts[idx[k]][d] - pts[idx[0]][d]);
          auto [fs, xs] = eval(p);
          pts[idx[k]] = xs;
          fv[idx[k]] = fs;
        }
      }
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  return {pts[best], fv[best]};
}

}  // namespace detail

// Multi-start bounded simplex search. The first start is x0; later starts are uniform in
// the box. Each start is relaunched from its own optimum until it stops improving.
inline OptimizeReport minimize(const std::function<double(const std::vector<double>&)>& f,
                               const std::vector<double>& x0, const Box& box, const NelderMeadOptions& o = {}) {
  if (x0.size() != box.dim()) throw Error("minimize: start point and box differ in dimension");
  OptimizeReport r;
  r.window_used = box;
  std::mt19937_64 rng(o.seed);
  bool have = false;
  for (int s = 0; s < std::max(o.restarts, 1); ++s) {
    std::vector<double> x = x0;
    if (s > 0)
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::uniform_real_distribution<double>(box.lo[i], box.hi[i])(rng);
    auto res = detail::nelder_mead(f, x, box, o, r.evaluations, r.trace);
    for (int again = 0; again < 5; ++again) {
      NelderMeadOptions o2 = o;
      o2.initial_step = o.initial_step * 0.1;
      auto res2 = detail::nelder_mead(f, res.x, box, o2, r.evaluations, r.trace);
      const bool better = res2.f < res.f - o.ftol;
      if (res2.f < res.f) res = res2;
      if (!better) break;
    }
    if (!have || res.f < r.best_energy) {
      r.best_energy = res.f;
      r.best_params = res.x;
      have = true;
    }
  }
  r.best_energy = f(r.best_params);
  ++r.evaluations;
  return r;
}

inline Statevector scv_statevector(const LatticeParams& p, int n_qubits = -1) {
  return Statevector(n_qubits < 0 ? p.n_sys() : n_qubits, scv_index(p));
}

inline Statevector prepare_ground(const GroundStateAngles& a, const LatticeParams& p, int n_qubits = -1,
                                  BondOrder order = BondOrder::EvenOdd) {
  return run(build_qgs(a, p, n_qubits, order), scv_statevector(p, n_qubits));
}

inline OptimizeReport optimize_ground(const LatticeParams& p, const NelderMeadOptions& o = {},
                                      BondOrder order = BondOrder::EvenOdd) {
  const PauliSum h = build_hamiltonian(p);
  auto f = [&](const std::vector<double>& x) {
    return expectation(prepare_ground({x[0], x[1]}, p, -1, order), h);
  };
  Box box{{-kPi, -kPi}, {kPi, kPi}};
  return minimize(f, {0.1, 0.5}, box, o);
}

// Energy of the normalized state b_k^dagger |base> as a function of the order-j
// parameters, built from precomputed meson actions on the base state.
class AnsatzEnergy {
 public:
  AnsatzEnergy(const LatticeParams& p, std::size_t ik, int j, const CVec& base_sector)
      : p_(p), basis_(p), table_(p), ik_(ik), j_(j) {
    const SpMat hs = sector_sparse(build_hamiltonian(p), basis_);
    bare_ = bare_coefficients(ik, table_);
    const int N = p.n_stag();
    for (const auto& [key, c] : bare_)
      if (periodic_distance(key.first, key.second, N) <= j) keys_.push_back(key);
    CMat v(base_sector.size(), static_cast<Eigen::Index>(keys_.size()));
    for (std::size_t i = 0; i < keys_.size(); ++i) {
      const SpMat m = sector_sparse(meson_operator(keys_[i].first, keys_[i].second, p), basis_);
      v.col(static_cast<Eigen::Index>(i)) = m * base_sector;
    }
    vecs_ = v;
    gram_ = v.adjoint() * v;
    hgram_ = v.adjoint() * (hs * v);
  }

  int label() const { return momentum_labels(p_.n_phys).at(ik_); }

  CVec coefficient_vector(const AnsatzParams& ap) const {
    const auto c = order_j_coefficients(ik_, j_, ap, table_);
    CVec out(static_cast<Eigen::Index>(keys_.size()));
    for (std::size_t i = 0; i < keys_.size(); ++i) out[static_cast<Eigen::Index>(i)] = c.entries.at(keys_[i]);
    return out;
  }

  double energy(const AnsatzParams& ap) const {
    const CVec c = coefficient_vector(ap);
    const cplx num = c.dot(hgram_ * c), den = c.dot(gram_ * c);
    return num.real() / den.real();
  }

  CVec state(const AnsatzParams& ap) const {
    CVec s = vecs_ * coefficient_vector(ap);
    return s / s.norm();
  }

  const SectorBasis& basis() const { return basis_; }
  const KinematicTable& table() const { return table_; }

 private:
  LatticeParams p_;
  SectorBasis basis_;
  KinematicTable table_;
  std::size_t ik_;
  int j_;
  CoeffMap bare_;
  std::vector<std::pair<int, int>> keys_;
  CMat vecs_, gram_, hgram_;
};

// Parameter vector layout: (d, parity) for d = 1..j, parity fastest.
inline std::vector<double> pack_alphas(const AnsatzParams& ap, int label, int j) {
  std::vector<double> x;
  for (int d = 1; d <= j; ++d)
    for (int i = 0; i < 2; ++i) x.push_back(ap.get(label, d, i).value_or(0.0));
  return x;
}

inline void unpack_alphas(AnsatzParams& ap, int label, int j, const std::vector<double>& x) {
  for (int d = 1; d <= j; ++d)
    for (int i = 0; i < 2; ++i) ap.set(label, d, i, x[static_cast<std::size_t>(2 * (d - 1) + i)]);
}

// Order-j optimization. Parameters from lower orders stay inside a window of
// 0.1 max(|alpha|, 1) around their previous optimum; new ones range over [-5, 5].
// Objective needs label() and energy(const AnsatzParams&).
template <class Objective>
OptimizeReport optimize_ansatz(const Objective& obj, int j, const AnsatzParams& prev, const NelderMeadOptions& o = {}) {
  const int label = obj.label();
  if (j > 1 && !prev.complete(label, j - 1))
    throw Error("optimize_ansatz: previous orders incomplete for label " + std::to_string(label));
  Box box;
  std::vector<double> x0;
  for (int d = 1; d <= j; ++d)
    for (int i = 0; i < 2; ++i) {
      if (d < j) {
        const double a = prev.at(label, d, i), w = 0.1 * std::max(std::abs(a), 1.0);
        box.lo.push_back(a - w);
        box.hi.push_back(a + w);
        x0.push_back(a);
      } else {
        box.lo.push_back(-5.0);
        box.hi.push_back(5.0);
        x0.push_back(prev.get(label, d, i).value_or(0.0));
      }
    }
  AnsatzParams work = prev;
  work.set_order(j);
  auto f = [&](const std::vector<double>& x) {
    AnsatzParams a = work;
    unpack_alphas(a, label, j, x);
    return obj.energy(a);
  };
  return minimize(f, x0, box, o);
}

inline CVec to_cvec(const std::vector<cplx>& v) {
  return Eigen::Map<const CVec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Circuit objective: Q_WP for a single momentum acts on a prepared vacuum with one
// ancilla; the energy is that of the normalized ancilla = 1 branch.
class WavePacketEnergy {
 public:
  struct Evaluation {
    double energy = 0;
    double accept = 0;  // probability of the ancilla = 1 branch
    CVec state;         // that branch on the sector basis, normalized
  };

  WavePacketEnergy(const LatticeParams& p, std::size_t ik, int j, const Statevector& vacuum, PrepScheme scheme)
      : p_(p), basis_(p), table_(p), ik_(ik), j_(j), vacuum_(vacuum), scheme_(scheme) {
    if (vacuum.n_qubits() != p.n_sys() + 1) throw Error("vacuum register must hold the system plus one ancilla");
    scheme_.order = j;
    scheme_.validate();
    h_ = sector_sparse(build_hamiltonian(p), basis_);
  }

  int label() const { return momentum_labels(p_.n_phys).at(ik_); }

  Evaluation evaluate(const AnsatzParams& ap) const {
    const auto c = order_j_coefficients(ik_, j_, ap, table_);
    const auto q = build_qwp(c, scheme_, p_.n_sys(), p_, p_.n_sys() + 1);
    const Statevector out = run(q.circuit, vacuum_);
    Evaluation e;
    e.state = to_cvec(basis_.project(out.amplitudes(), 1));
    e.accept = e.state.squaredNorm();
    if (e.accept < 1e-14) throw Error("wave-packet branch has vanishing weight");
    e.state /= std::sqrt(e.accept);
    e.energy = e.state.dot(h_ * e.state).real();
    return e;
  }

  double energy(const AnsatzParams& ap) const { return evaluate(ap).energy; }

 private:
  LatticeParams p_;
  SectorBasis basis_;
  KinematicTable table_;
  std::size_t ik_;
  int j_;
  Statevector vacuum_;
  PrepScheme scheme_;
  SpMat h_;
};

}  // namespace z2h
