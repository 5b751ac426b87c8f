#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "z2h/model.hpp"

namespace z2h {

using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using SpMat = Eigen::SparseMatrix<cplx>;

inline constexpr std::size_t kDenseLimit = 4096;
inline constexpr std::size_t kSectorLimit = 200000;

inline void check_sector_size(std::size_t dim) {
  if (dim > kSectorLimit)
    throw ResourceError("sector dimension " + std::to_string(dim) + " exceeds the limit of " +
                        std::to_string(kSectorLimit));
}

// Matrix of a charge-conserving operator in the sector basis. Terms mapping outside
// the sector are dropped.
inline SpMat sector_sparse(const PauliSum& op, const SectorBasis& basis) {
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(basis.size() * op.size());
  for (std::size_t j = 0; j < basis.size(); ++j) {
    const u64 s = basis.state(j);
    for (const auto& t : op.terms()) {
      const u64 target = s ^ t.word.x;
      if (!basis.contains(target)) continue;
      trip.emplace_back(static_cast<int>(basis.index(target)), static_cast<int>(j),
                        t.coef * word_phase(t.word, s));
    }
  }
  const int n = static_cast<int>(basis.size());
  SpMat m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

inline CMat sector_dense(const PauliSum& op, const SectorBasis& basis) {
  if (basis.size() > kDenseLimit)
    throw ResourceError("dense sector matrix requested for dimension " + std::to_string(basis.size()));
  return CMat(sector_sparse(op, basis));
}

struct EigenSolution {
  std::vector<double> energies;
  CMat states;                             // columns in the sector basis
  std::vector<std::optional<int>> labels;  // momentum labels i (k = i*pi/N_P)
  std::vector<double> phases;              // arg of the translation eigenvalue

  std::size_t size() const { return energies.size(); }
  CVec state(std::size_t i) const { return states.col(static_cast<Eigen::Index>(i)); }
};

namespace detail {

// Lowest eigenpair of `a` restricted to the complement of `locked`, Lanczos with full
// reorthogonalisation and restarts from the current Ritz vector.
inline std::pair<double, CVec> lanczos_lowest(const SpMat& a, const std::vector<CVec>& locked,
                                              std::mt19937_64& rng, double tol) {
  const Eigen::Index n = a.rows();
  const int m_max = static_cast<int>(std::min<Eigen::Index>(n - static_cast<Eigen::Index>(locked.size()), 160));
  std::normal_distribution<double> g;
  CVec start(n);
  for (Eigen::Index i = 0; i < n; ++i) start[i] = cplx(g(rng), g(rng));
  auto deflate = [&](CVec& v) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& l : locked) v -= l * l.dot(v);
  };
  double theta = 0;
  CVec ritz;
  for (int restart = 0; restart < 200; ++restart) {
    deflate(start);
    start.normalize();
    std::vector<CVec> q{start};
    std::vector<double> alpha, beta;
    for (int j = 0; j < m_max; ++j) {
      CVec w = a * q[static_cast<std::size_t>(j)];
      alpha.push_back(q[static_cast<std::size_t>(j)].dot(w).real());
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& v : q) w -= v * v.dot(w);
        deflate(w);
      }
      const double b = w.norm();
      if (b < 1e-12 || j == m_max - 1) break;
      beta.push_back(b);
      q.push_back(w / b);
    }
    const int m = static_cast<int>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) t(i, i) = alpha[static_cast<std::size_t>(i)];
    for (int i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    theta = es.eigenvalues()[0];
    ritz = CVec::Zero(n);
    for (int i = 0; i < m; ++i) ritz += q[static_cast<std::size_t>(i)] * es.eigenvectors()(i, 0);
    deflate(ritz);
    ritz.normalize();
    theta = ritz.dot(a * ritz).real();
    const double res = (a * ritz - theta * ritz).norm();
    if (res < tol) return {theta, ritz};
    start = ritz;
  }
  throw Error("Lanczos failed to converge");
}

}  // namespace detail

// Lowest n_states eigenpairs of a Hermitian sector operator; dense up to kDenseLimit,
// Lanczos with locking above.
inline EigenSolution diagonalize(const PauliSum& h, const SectorBasis& basis, std::size_t n_states) {
  const std::size_t dim = basis.size();
  check_sector_size(dim);
  n_states = std::min(n_states, dim);
  EigenSolution sol;
  if (dim <= kDenseLimit) {
    Eigen::SelfAdjointEigenSolver<CMat> es(sector_dense(h, basis));
    if (es.info() != Eigen::Success) throw Error("dense eigensolver failed");
    for (std::size_t i = 0; i < n_states; ++i) sol.energies.push_back(es.eigenvalues()[static_cast<Eigen::Index>(i)]);
    sol.states = es.eigenvectors().leftCols(static_cast<Eigen::Index>(n_states));
  } else {
    const SpMat a = sector_sparse(h, basis);
    std::mt19937_64 rng(12345);
    std::vector<CVec> locked;
    std::vector<double> ev;
    for (std::size_t i = 0; i < n_states; ++i) {
      auto [e, v] = detail::lanczos_lowest(a, locked, rng, 1e-11);
      ev.push_back(e);
      locked.push_back(v);
    }
    std::vector<std::size_t> order(n_states);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return ev[i] < ev[j]; });
    sol.states.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(n_states));
    for (std::size_t i = 0; i < n_states; ++i) {
      sol.energies.push_back(ev[order[i]]);
      sol.states.col(static_cast<Eigen::Index>(i)) = locked[order[i]];
    }
  }
  sol.labels.assign(n_states, std::nullopt);
  sol.phases.assign(n_states, 0.0);
  return sol;
}

// Residual norms |H v - E v| for each returned pair.
inline std::vector<double> residuals(const PauliSum& h, const SectorBasis& basis, const EigenSolution& sol) {
  const SpMat a = sector_sparse(h, basis);
  std::vector<double> r;
  for (std::size_t i = 0; i < sol.size(); ++i) {
    const CVec v = sol.state(i);
    r.push_back((a * v - sol.energies[i] * v).norm());
  }
  return r;
}

// Two-staggered-site translation in the sector basis. Fermions shift by two sites; the
// boson link follows the gauge transformation back from the explicit-link picture.
// The overall sign is fixed so that the strong-coupling vacuum is invariant.
class Translation {
 public:
  explicit Translation(const SectorBasis& basis) : basis_(&basis) {
    const auto& p = basis.params();
    const int N = p.n_stag(), Q = p.n_phys;
    auto image = [&](u64 s) -> std::pair<u64, double> {
      const u64 f = s & p.fermion_mask();
      u64 b = (s >> N) & 1u;
      const int f1 = static_cast<int>((f >> (N - 2)) & 1u), f2 = static_cast<int>((f >> (N - 1)) & 1u);
      const int w = f1 + f2;
      if (w % 2 == 0) b ^= 1u;
      const u64 shifted = ((f << 2) | (f >> (N - 2))) & p.fermion_mask();
      const double sign = ((w * (Q - w)) % 2 == 0) ? 1.0 : -1.0;
      return {shifted | (b << N), sign};
    };
    const double ref = image(scv_index(p)).second;
    target_.resize(basis.size());
    sign_.resize(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) {
      auto [t, s] = image(basis.state(i));
      target_[i] = basis.index(t);
      sign_[i] = s * ref;
    }
  }

  CVec apply(const CVec& v) const {
    CVec out = CVec::Zero(v.size());
    for (std::size_t i = 0; i < target_.size(); ++i)
      out[static_cast<Eigen::Index>(target_[i])] += sign_[i] * v[static_cast<Eigen::Index>(i)];
    return out;
  }

  SpMat matrix() const {
    std::vector<Eigen::Triplet<cplx>> trip;
    for (std::size_t i = 0; i < target_.size(); ++i)
      trip.emplace_back(static_cast<int>(target_[i]), static_cast<int>(i), sign_[i]);
    const int n = static_cast<int>(target_.size());
    SpMat m(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
  }

 private:
  const SectorBasis* basis_;
  std::vector<std::size_t> target_;
  std::vector<double> sign_;
};

// Momentum of a translation eigenvalue lambda = exp(-2ik), folded into [-pi/2, pi/2).
inline double momentum_from_eigenvalue(cplx lambda) {
  double k = -std::arg(lambda) / 2.0;
  if (k >= kPi / 2 - 1e-9) k -= kPi;
  return k;
}

// Resolve each degenerate energy subspace into translation eigenstates, ordered by the
// eigenvalue phase. Groups not closed under translation (cut by n_states) stay unlabelled.
inline void label_momenta(EigenSolution& sol, const SectorBasis& basis, double degen_tol = 1e-8) {
  const Translation tr(basis);
  const int np = basis.params().n_phys;
  const auto labels = momentum_labels(np);
  std::size_t i = 0;
  while (i < sol.size()) {
    std::size_t j = i + 1;
    while (j < sol.size() && std::abs(sol.energies[j] - sol.energies[i]) < degen_tol * (1 + std::abs(sol.energies[i]))) ++j;
    const auto g = static_cast<Eigen::Index>(j - i);
    const CMat w = sol.states.middleCols(static_cast<Eigen::Index>(i), g);
    CMat tw(w.rows(), g);
    for (Eigen::Index c = 0; c < g; ++c) tw.col(c) = tr.apply(w.col(c));
    const CMat tg = w.adjoint() * tw;
    if ((tw - w * tg).norm() > 1e-8) {
      i = j;
      continue;
    }
    Eigen::ComplexEigenSolver<CMat> ces(tg);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(g));
    std::iota(order.begin(), order.end(), 0);
    const auto& lam = ces.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return std::arg(lam[a]) < std::arg(lam[b]) - 1e-10; });
    CMat u(g, g);
    for (Eigen::Index c = 0; c < g; ++c) u.col(c) = ces.eigenvectors().col(order[static_cast<std::size_t>(c)]);
    // Gram-Schmidt inside clusters of equal eigenvalue.
    for (Eigen::Index c = 0; c < g; ++c) {
      for (Eigen::Index d = 0; d < c; ++d)
        if (std::abs(lam[order[static_cast<std::size_t>(c)]] - lam[order[static_cast<std::size_t>(d)]]) < 1e-8)
          u.col(c) -= u.col(d) * u.col(d).dot(u.col(c));
      u.col(c).normalize();
    }
    if ((u.adjoint() * u - CMat::Identity(g, g)).norm() > 1e-8)
      throw Error("degenerate subspace mixes translation eigenvalues non-orthogonally");
    sol.states.middleCols(static_cast<Eigen::Index>(i), g) = w * u;
    for (Eigen::Index c = 0; c < g; ++c) {
      const cplx l = lam[order[static_cast<std::size_t>(c)]];
      const auto idx = static_cast<std::size_t>(i) + static_cast<std::size_t>(c);
      sol.phases[idx] = std::arg(l);
      const double k = momentum_from_eigenvalue(l);
      for (int lab : labels)
        if (std::abs(momentum(lab, np) - k) < 1e-6) sol.labels[idx] = lab;
    }
    i = j;
  }
}

inline double fidelity(const CVec& a, const CVec& b) {
  if (a.size() != b.size()) throw Error("fidelity: dimension mismatch");
  return std::norm(a.dot(b));
}

// Probability weight with the boson link opposite to its vacuum orientation.
inline double flipped_link_weight(const CVec& v, const SectorBasis& basis) {
  const auto& p = basis.params();
  const u64 ref = (scv_index(p) >> p.boson()) & 1u;
  double w = 0;
  for (std::size_t i = 0; i < basis.size(); ++i)
    if (((basis.state(i) >> p.boson()) & 1u) != ref) w += std::norm(v[static_cast<Eigen::Index>(i)]);
  return w;
}

// e^{-itH} v via the full eigendecomposition (dense) or a Krylov propagator.
class ExactEvolver {
 public:
  ExactEvolver(const PauliSum& h, const SectorBasis& basis) {
    check_sector_size(basis.size());
    if (basis.size() <= kDenseLimit) {
      Eigen::SelfAdjointEigenSolver<CMat> es(sector_dense(h, basis));
      energies_ = es.eigenvalues();
      vecs_ = es.eigenvectors();
      dense_ = true;
    } else {
      sparse_ = sector_sparse(h, basis);
    }
  }

  CVec evolve(const CVec& v, double t) const {
    if (dense_) {
      CVec c = vecs_.adjoint() * v;
      for (Eigen::Index i = 0; i < c.size(); ++i) c[i] *= std::exp(cplx(0, -t * energies_[i]));
      return vecs_ * c;
    }
    return krylov(v, t);
  }

 private:
  CVec krylov(CVec v, double t) const {
    const double nv = v.norm();
    if (nv == 0 || t == 0) return v;
    v /= nv;
    double done = 0, tau = std::copysign(std::min(std::abs(t), 1.0), t);
    constexpr int m = 30;
    while (std::abs(done) < std::abs(t) - 1e-15) {
      if (std::abs(done + tau) > std::abs(t)) tau = t - done;
      std::vector<CVec> q{v};
      Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
      int k = 0;
      double last_beta = 0;
      for (; k < m; ++k) {
        CVec w = sparse_ * q[static_cast<std::size_t>(k)];
        tri(k, k) = q[static_cast<std::size_t>(k)].dot(w).real();
        for (const auto& u : q) w -= u * u.dot(w);
        last_beta = w.norm();
        if (k + 1 == m || last_beta < 1e-13) break;
        tri(k, k + 1) = tri(k + 1, k) = last_beta;
        q.push_back(w / last_beta);
      }
      const int kk = k + 1;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri.topLeftCorner(kk, kk));
      Eigen::VectorXcd y = Eigen::VectorXcd::Zero(kk);
      for (int i = 0; i < kk; ++i) {
        const cplx ph = std::exp(cplx(0, -tau * es.eigenvalues()[i]));
        y += es.eigenvectors().col(i).cast<cplx>() * (ph * es.eigenvectors()(0, i));
      }
      const double err = last_beta * std::abs(y[kk - 1]);
      if (err > 1e-12 && last_beta >= 1e-13) {
        tau /= 2;
        continue;
      }
      CVec nvv = CVec::Zero(v.size());
      for (int i = 0; i < kk; ++i) nvv += q[static_cast<std::size_t>(i)] * y[i];
      v = nvv / nvv.norm();
      done += tau;
    }
    return v * nv;
  }

  bool dense_ = false;
  Eigen::VectorXd energies_;
  CMat vecs_;
  SpMat sparse_;
};

// Exact-diagonalization bundle for one parameter point: basis, spectrum with momentum
// labels, the ground state and single-particle reference states.
class SpectrumOracle {
 public:
  explicit SpectrumOracle(const LatticeParams& p, std::size_t n_states = 64)
      : params_(p), basis_(p), h_(build_hamiltonian(p)) {
    sol_ = diagonalize(h_, basis_, n_states);
    label_momenta(sol_, basis_);
  }

  const LatticeParams& params() const { return params_; }
  const SectorBasis& basis() const { return basis_; }
  const PauliSum& hamiltonian() const { return h_; }
  const EigenSolution& solution() const { return sol_; }
  double ground_energy() const { return sol_.energies.front(); }
  CVec ground_state() const { return sol_.state(0); }

  // Lowest excited state carrying momentum label `lab` whose link weight stays on the
  // vacuum side (below `flux_threshold`).
  std::optional<std::size_t> meson_state(int lab, double flux_threshold = 0.5) const {
    for (std::size_t i = 1; i < sol_.size(); ++i) {
      if (!sol_.labels[i] || *sol_.labels[i] != lab) continue;
      if (flipped_link_weight(sol_.state(i), basis_) >= flux_threshold) continue;
      return i;
    }
    return std::nullopt;
  }

 private:
  LatticeParams params_;
  SectorBasis basis_;
  PauliSum h_;
  EigenSolution sol_;
};

}  // namespace z2h
