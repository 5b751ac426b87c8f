#include <gtest/gtest.h>

#include <set>

#include "oracle.hpp"
#include "z2h/z2h.hpp"

using namespace z2h;

namespace {

LatticeParams lattice(int np, double m = 1.0, double eps = -0.3, double hop = 1.0) {
  LatticeParams p;
  p.n_phys = np;
  p.mass = m;
  p.eps = eps;
  p.hopping = hop;
  return p;
}

}  // namespace

TEST(BrillouinZone, FivePhysicalSites) {
  const auto ks = brillouin_zone(lattice(5));
  ASSERT_EQ(ks.size(), 5u);
  const double expect[] = {-2 * kPi / 5, -kPi / 5, 0, kPi / 5, 2 * kPi / 5};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(ks[i], expect[i], 1e-15);
}

TEST(BrillouinZone, ThirteenSitesAndSingleSite) {
  const auto ks = brillouin_zone(lattice(13));
  ASSERT_EQ(ks.size(), 13u);
  EXPECT_NEAR(ks.front(), -6 * kPi / 13, 1e-15);
  EXPECT_NEAR(ks.back(), 6 * kPi / 13, 1e-15);
  for (double k : ks) {
    EXPECT_GE(k, -kPi / 2);
    EXPECT_LT(k, kPi / 2);
  }
  const auto one = brillouin_zone(lattice(1));
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], 0.0);
}

TEST(Hamiltonian, TermCountsAtFiveSites) {
  const auto parts = build_hamiltonian_parts(lattice(5));
  EXPECT_EQ(parts.hop.simplified().size(), 20u);
  EXPECT_EQ(parts.mass.simplified().size(), 10u);
  EXPECT_EQ(parts.elec.simplified().size(), 10u);
  EXPECT_EQ(build_hamiltonian(lattice(5)).simplified().size(), 40u);
}

TEST(Hamiltonian, SignConventions) {
  EXPECT_EQ(lattice(5).alpha_n(), 1);
  EXPECT_EQ(lattice(2).alpha_n(), -1);
  EXPECT_EQ(gamma_sign(0), 1);
  EXPECT_EQ(gamma_sign(1), -1);
  EXPECT_EQ(gamma_sign(2), -1);
  EXPECT_EQ(gamma_sign(3), 1);
}

TEST(Hamiltonian, HermitianWithRealCoefficients) {
  for (int np : {2, 3, 5}) {
    const auto h = build_hamiltonian(lattice(np)).simplified();
    EXPECT_TRUE(h.is_hermitian());
    EXPECT_TRUE(h.has_real_coefficients());
    EXPECT_EQ((h - h.adjoint()).simplified(1e-13).size(), 0u);
  }
}

TEST(Hamiltonian, ConservesCharge) {
  for (int np : {2, 5}) {
    const auto p = lattice(np);
    EXPECT_EQ(commutator(build_hamiltonian(p), charge_operator(p)).simplified(1e-13).size(), 0u);
  }
}

TEST(Hamiltonian, MatchesDenseKroneckerConstruction) {
  // Bond-by-bond check against matrices assembled from the defining Pauli strings.
  const auto p = lattice(2);
  const int n = p.n_sys();
  oracle::Mat h = oracle::Mat::Zero(1 << n, 1 << n);
  const int N = p.n_stag();
  for (int b = 0; b < N - 1; ++b) {
    std::string xx(static_cast<std::size_t>(n), 'I'), yy = xx;
    xx[b] = xx[b + 1] = 'X';
    yy[b] = yy[b + 1] = 'Y';
    h += 0.25 * (oracle::word(xx) + oracle::word(yy));
  }
  {
    std::string xxx(static_cast<std::size_t>(n), 'I'), yxy = xxx;
    xxx[N - 1] = xxx[p.boson()] = xxx[0] = 'X';
    yxy[N - 1] = 'Y';
    yxy[p.boson()] = 'X';
    yxy[0] = 'Y';
    h += 0.25 * p.alpha_n() * (oracle::word(xxx) + oracle::word(yxy));
  }
  for (int s = 0; s < N; ++s) {
    std::string z(static_cast<std::size_t>(n), 'I');
    z[s] = 'Z';
    h += (s % 2 == 1 ? 1.0 : -1.0) * p.mass / 2.0 * oracle::word(z);
  }
  {
    std::string zb(static_cast<std::size_t>(n), 'I');
    zb[p.boson()] = 'Z';
    h += p.eps * oracle::word(zb);
    for (int s = 0; s < N - 1; ++s) {
      zb[s] = 'Z';
      h += p.eps * gamma_sign(s) * oracle::word(zb);
    }
  }
  EXPECT_LT((oracle::dense(build_hamiltonian(p)) - h).norm(), 1e-12);
}

TEST(Scv, BosonFollowsFieldSign) {
  auto p = lattice(2, 1.0, -0.3);
  // fermions 0,1,0,1 -> bits 1 and 3; boson up = bit 0
  EXPECT_EQ(scv_index(p), u64{0b01010});
  p.eps = 0.3;
  EXPECT_EQ(scv_index(p), u64{0b11010});
  p.eps = 0.0;
  EXPECT_EQ(scv_index(p), u64{0b01010});
}

TEST(Scv, MassOnlyEnergy) {
  for (int np : {2, 5}) {
    const auto p = lattice(np, 1.3, 0.0, 0.0);
    const Statevector s(p.n_sys(), scv_index(p));
    EXPECT_NEAR(expectation(s, build_hamiltonian(p)), -p.n_stag() * p.mass / 2, 1e-12);
  }
}

TEST(SectorBasis, DimensionAndWeight) {
  const SectorBasis b(lattice(5));
  EXPECT_EQ(b.size(), 504u);
  for (u64 s : b.states()) EXPECT_EQ(popcount(s & lattice(5).fermion_mask()), 5);
  EXPECT_EQ(SectorBasis(lattice(2)).size(), 12u);
}

TEST(SectorBasis, HamiltonianClosesOnSector) {
  const auto p = lattice(3);
  const SectorBasis b(p);
  const auto h = build_hamiltonian(p);
  for (u64 s : b.states()) {
    std::vector<cplx> v(std::size_t{1} << p.n_sys());
    v[s] = 1.0;
    const auto out = h.apply(v);
    for (std::size_t i = 0; i < out.size(); ++i)
      if (std::abs(out[i]) > 1e-14) {
        EXPECT_TRUE(b.contains(i));
      }
  }
}

TEST(Diagonalize, GroundEnergyFiveSites) {
  const SpectrumOracle o(lattice(5));
  EXPECT_NEAR(o.ground_energy(), -8.8747, 5e-4);
}

TEST(Diagonalize, AgreesWithDenseBruteForce) {
  const auto p = lattice(2);
  const SectorBasis b(p);
  const oracle::Mat full = oracle::dense(build_hamiltonian(p));
  oracle::Mat sec(b.size(), b.size());
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) sec(i, j) = full(b.state(i), b.state(j));
  Eigen::SelfAdjointEigenSolver<oracle::Mat> es(sec);
  const SpectrumOracle o(p, 12);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(o.solution().energies[i], es.eigenvalues()[i], 1e-10);
}

TEST(Diagonalize, ResidualsAndNormalization) {
  const auto p = lattice(3);
  const SpectrumOracle o(p, 20);
  for (double r : residuals(o.hamiltonian(), o.basis(), o.solution())) EXPECT_LT(r, 1e-10);
  for (std::size_t i = 0; i < o.solution().size(); ++i) EXPECT_NEAR(o.solution().state(i).norm(), 1.0, 1e-12);
}

TEST(Diagonalize, FreeLimitGroundState) {
  const auto p = lattice(3, 1.0, 0.0, 0.0);
  const SpectrumOracle o(p, 4);
  EXPECT_NEAR(o.ground_energy(), -p.n_stag() * p.mass / 2, 1e-12);
  // SCV sits in the ground space (the boson value is free when eps = 0).
  const auto& b = o.basis();
  const CVec g = o.ground_state();
  double w = std::norm(g[static_cast<Eigen::Index>(b.index(scv_index(p)))]);
  w += std::norm(g[static_cast<Eigen::Index>(b.index(scv_index(p) | bit(p.boson())))]);
  EXPECT_NEAR(w, 1.0, 1e-10);
}

TEST(Diagonalize, SizeGuard) {
  EXPECT_THROW(check_sector_size(kSectorLimit + 1), ResourceError);
  EXPECT_NO_THROW(check_sector_size(504));
}

TEST(Momentum, GroundThenRestMesonThenPair) {
  const SpectrumOracle o(lattice(5));
  const auto& sol = o.solution();
  ASSERT_TRUE(sol.labels[0] && sol.labels[1] && sol.labels[2] && sol.labels[3]);
  EXPECT_EQ(*sol.labels[0], 0);
  EXPECT_EQ(*sol.labels[1], 0);
  EXPECT_NEAR(sol.energies[2], sol.energies[3], 1e-9);
  EXPECT_EQ((std::set<int>{*sol.labels[2], *sol.labels[3]}), (std::set<int>{-1, 1}));
  EXPECT_LT(sol.energies[1], sol.energies[2] - 1e-3);
}

TEST(Momentum, TranslationUnitaryAndCommuting) {
  const auto p = lattice(3);
  const SectorBasis b(p);
  const Translation t(b);
  const SpMat tm = t.matrix();
  const CMat td = CMat(tm);
  EXPECT_LT((td.adjoint() * td - CMat::Identity(td.rows(), td.cols())).norm(), 1e-12);
  const CMat h = sector_dense(build_hamiltonian(p), b);
  EXPECT_LT((td * h - h * td).norm(), 1e-10);
}

TEST(Momentum, ReflectionSymmetricBand) {
  for (int np : {2, 3, 5}) {
    const SpectrumOracle o(lattice(np));
    for (int lab : momentum_labels(np)) {
      const auto a = o.meson_state(lab), b = o.meson_state(-lab);
      if (!a || !b) continue;  // -lab can fall outside the zone
      EXPECT_NEAR(o.solution().energies[*a], o.solution().energies[*b], 1e-9) << "N_P=" << np << " label " << lab;
    }
  }
}

TEST(ExactEvolve, IdentityPhaseAndTaylor) {
  const auto p = lattice(2);
  const SpectrumOracle o(p);
  const ExactEvolver ev(o.hamiltonian(), o.basis());
  const CVec v = oracle::random_state(static_cast<Eigen::Index>(o.basis().size()), 3);
  EXPECT_LT((ev.evolve(v, 0.0) - v).norm(), 1e-14);

  const CVec g = o.ground_state();
  const CVec gt = ev.evolve(g, 1.7);
  EXPECT_LT((gt - std::exp(cplx(0, -1.7 * o.ground_energy())) * g).norm(), 1e-12);

  // Order-4 Taylor steps; error per step ~ dt^5 / 120 * ||H||^5.
  const CMat h = sector_dense(o.hamiltonian(), o.basis());
  auto taylor = [&](int steps) {
    const double dt = 1.0 / steps;
    CVec w = v;
    for (int s = 0; s < steps; ++s) {
      CVec term = w, acc = w;
      for (int k = 1; k <= 4; ++k) {
        term = (cplx(0, -dt) / static_cast<double>(k)) * (h * term);
        acc += term;
      }
      w = acc;
    }
    return w;
  };
  const CVec exact = ev.evolve(v, 1.0);
  const double e1 = (taylor(400) - exact).norm(), e2 = (taylor(800) - exact).norm();
  EXPECT_LT(e2, 1e-8);
  EXPECT_LT(e2, e1);
  EXPECT_NEAR(ev.evolve(v, 1.0).norm(), 1.0, 1e-12);
}

TEST(Fidelity, Basics) {
  CVec a = CVec::Zero(3), b = CVec::Zero(3);
  a[0] = 1;
  b[1] = 1;
  EXPECT_NEAR(fidelity(a, a), 1.0, 1e-15);
  EXPECT_NEAR(fidelity(a, b), 0.0, 1e-15);
  EXPECT_THROW(fidelity(a, CVec::Zero(2)), Error);
}
