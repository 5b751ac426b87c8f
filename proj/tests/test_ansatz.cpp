#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "z2h/z2h.hpp"

using namespace z2h;

namespace {

LatticeParams lattice(int np, double m = 1.0, double eps = -0.3) {
  LatticeParams p;
  p.n_phys = np;
  p.mass = m;
  p.eps = eps;
  return p;
}

std::size_t index_of_label(int label, int np) {
  const auto labs = momentum_labels(np);
  return static_cast<std::size_t>(std::find(labs.begin(), labs.end(), label) - labs.begin());
}

AnsatzParams random_alphas(int np, int j, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  AnsatzParams ap(j);
  for (int lab : momentum_labels(np))
    for (int d = 1; d <= j; ++d)
      for (int i = 0; i < 2; ++i) ap.set(lab, d, i, u(rng));
  return ap;
}

std::vector<cplx> vacuum(const SpectrumOracle& o) {
  const CVec g = o.ground_state();
  return o.basis().embed(std::span<const cplx>(g.data(), static_cast<std::size_t>(g.size())), o.params().n_sys());
}

cplx inner(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  cplx s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

}  // namespace

TEST(Kinematics, RestAndZoneEdgeValues) {
  LatticeParams p = lattice(2);
  const KinematicTable t(p);
  // zone for N_P = 2 is {-pi/2, 0}
  EXPECT_NEAR(t.omega(1), 1.0, 1e-15);
  EXPECT_NEAR(t.v(1), 0.0, 1e-15);
  EXPECT_NEAR(t.omega(0), std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(t.v(0), -1.0 / (1.0 + std::sqrt(2.0)), 1e-14);
}

TEST(Kinematics, ParityUnderReflection) {
  const KinematicTable t(lattice(5));
  const auto& ks = t.momenta();
  for (std::size_t i = 0; i < ks.size(); ++i)
    for (std::size_t j = 0; j < ks.size(); ++j)
      if (std::abs(ks[i] + ks[j]) < 1e-12) {
        EXPECT_NEAR(t.omega(i), t.omega(j), 1e-14);
        EXPECT_NEAR(t.v(i), -t.v(j), 1e-14);
      }
}

TEST(Kinematics, MasslessZeroMomentumIsSingular) {
  EXPECT_THROW(KinematicTable(lattice(5, 0.0)), Error);
  EXPECT_THROW(KinematicTable(lattice(5, -1.0)), ConfigError);
}

TEST(MesonOperator, DiagonalIsNumberOperator) {
  const auto p = lattice(5);
  PauliSum expect(p.n_sys());
  expect.add(0.5, PauliWord{});
  PauliWord z;
  z.set(3, 'Z');
  expect.add(-0.5, z);
  EXPECT_EQ((meson_operator(3, 3, p) - expect).simplified(1e-14).size(), 0u);
}

TEST(MesonOperator, NearestNeighbourHasNoString) {
  const auto p = lattice(5);
  const auto expect = (sigma_minus(p.n_sys(), 0) * sigma_plus(p.n_sys(), 1)).simplified();
  EXPECT_EQ((meson_operator(0, 1, p) - expect).simplified(1e-14).size(), 0u);
}

TEST(MesonOperator, AdjointSwapsEndsAtTwoSites) {
  // For m != n the table orders the annihilator first whenever m > n (or the string wraps),
  // so swapping the ends costs one fermionic exchange.
  const auto p = lattice(2);
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) {
      const oracle::Mat a = oracle::dense(meson_operator(m, n, p)).adjoint();
      const oracle::Mat b = oracle::dense(meson_operator(n, m, p));
      const double sign = m == n ? 1.0 : -1.0;
      EXPECT_LT((a - sign * b).norm(), 1e-13) << m << "," << n;
    }
}

TEST(MesonOperator, HalfwayPairSplitsIntoTwoWrappings) {
  const auto p = lattice(2);
  const auto s = meson_strings(0, 2, p);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(std::abs(s[0].coef), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(std::abs(s[1].coef), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NE(s[0].wrapped, s[1].wrapped);
  EXPECT_THROW(meson_strings(0, 4, p), Error);
}

TEST(MesonOperator, ChargeConservingAndGaugeCovariant) {
  // Every meson moves one fermion; the wrapped string flips the link, the short one does not.
  const auto p = lattice(3);
  const auto q = charge_operator(p);
  for (int m = 0; m < 6; ++m)
    for (int n = 0; n < 6; ++n) EXPECT_EQ(commutator(meson_operator(m, n, p), q).simplified(1e-13).size(), 0u);
}

TEST(BareCoefficients, SingleSiteHasOneTerm) {
  const auto p = lattice(1);
  const KinematicTable t(p);
  const auto c = bare_coefficients(0, t);
  int nonzero = 0;
  for (const auto& [key, v] : c)
    if (std::abs(v) > 1e-14) {
      ++nonzero;
      EXPECT_EQ(key, std::make_pair(0, 1));
    }
  EXPECT_EQ(nonzero, 1);
}

TEST(BareCoefficients, TwoSiteTranslationCovariance) {
  const auto p = lattice(5);
  const KinematicTable t(p);
  const std::size_t ik = index_of_label(1, 5);
  const double k = t.momenta()[ik];
  const auto c = bare_coefficients(ik, t);
  const int N = p.n_stag();
  const cplx ph = std::exp(kI * (2 * k));
  for (int m = 0; m < N; ++m)
    for (int n = 0; n < N; ++n) {
      const cplx shifted = c.at({(m + 2) % N, (n + 2) % N});
      EXPECT_LT(std::abs(shifted - ph * c.at({m, n})), 1e-13) << m << "," << n;
    }
}

TEST(BareCoefficients, ReflectedMomentumIsSignedConjugate) {
  const auto p = lattice(3);
  const KinematicTable t(p);
  for (int lab : momentum_labels(3)) {
    const auto c = bare_coefficients(index_of_label(lab, 3), t);
    const auto r = bare_coefficients(index_of_label(-lab, 3), t);
    for (const auto& [key, v] : c) {
      const double sign = ((key.first % 2 == 1) ? -1.0 : 1.0) * ((key.second % 2 == 0) ? -1.0 : 1.0);
      EXPECT_LT(std::abs(r.at(key) - sign * std::conj(v)), 1e-13);
    }
  }
}

TEST(OrderJ, ZerothOrderIsDiagonal) {
  const auto p = lattice(5);
  const KinematicTable t(p);
  const AnsatzParams none(0);
  for (std::size_t ik = 0; ik < t.size(); ++ik) {
    const auto c = order_j_coefficients(ik, 0, none, t);
    for (const auto& [key, v] : c.entries) EXPECT_EQ(key.first, key.second);
    EXPECT_NEAR(c.norm2(), 1.0, 1e-12);
  }
}

TEST(OrderJ, NormalizedForRandomParameters) {
  const auto p = lattice(5);
  const KinematicTable t(p);
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
    for (int j : {1, 2, 3}) {
      const auto ap = random_alphas(5, j, seed);
      for (std::size_t ik = 0; ik < t.size(); ++ik) {
        const auto c = order_j_coefficients(ik, j, ap, t);
        EXPECT_NEAR(c.norm2(), 1.0, 1e-12);
        for (const auto& [key, v] : c.entries) EXPECT_LE(periodic_distance(key.first, key.second, 10), j);
      }
    }
}

TEST(OrderJ, UniformShiftOnlyReweightsLengthOne) {
  for (int np : {2, 5}) {
    const auto p = lattice(np);
    const KinematicTable t(p);
    const auto ap = random_alphas(np, 1, 7);
    const double c = 0.37;
    AnsatzParams shifted(1);
    for (int lab : momentum_labels(np))
      for (int i = 0; i < 2; ++i) shifted.set(lab, 1, i, ap.at(lab, 1, i) + c);
    for (std::size_t ik = 0; ik < t.size(); ++ik) {
      const auto a = order_j_coefficients(ik, 1, ap, t), b = order_j_coefficients(ik, 1, shifted, t);
      // Rebuild b from a by hand: scale length-1 entries by e^{-c} and renormalize.
      double n2 = 0;
      std::map<std::pair<int, int>, cplx> hand;
      for (const auto& [key, v] : a.entries) {
        const cplx w = periodic_distance(key.first, key.second, p.n_stag()) == 1 ? v * std::exp(-c) : v;
        hand[key] = w;
        n2 += std::norm(w);
      }
      for (const auto& [key, v] : b.entries) EXPECT_LT(std::abs(v - hand.at(key) / std::sqrt(n2)), 1e-13);
    }
  }
}

TEST(OrderJ, MissingParameterThrows) {
  const KinematicTable t(lattice(5));
  AnsatzParams ap(1);
  ap.set(0, 1, 0, 0.5);
  EXPECT_THROW(order_j_coefficients(index_of_label(0, 5), 1, ap, t), Error);
  EXPECT_THROW(order_j_coefficients(index_of_label(1, 5), 1, ap, t), Error);
}

TEST(Profile, NormalizedAndSelfOverlap) {
  const auto p = lattice(5);
  const auto w = gaussian_profile(2, 7 * kPi / 20, 2 * kPi / 5, p);
  EXPECT_NEAR(std::abs(profile_overlap(w, w)), 1.0, 1e-14);
  EXPECT_THROW(gaussian_profile(2, 0.0, 0.0, p), ConfigError);
}

TEST(Profile, DisjointDeltasAreOrthogonal) {
  const auto p = lattice(5);
  EXPECT_EQ(std::abs(profile_overlap(delta_profile(0, p), delta_profile(3, p))), 0.0);
  EXPECT_THROW(profile_overlap(delta_profile(0, p), delta_profile(0, lattice(3))), Error);
}

TEST(Profile, FiveSitePacketOverlap) {
  const auto p = lattice(5);
  const auto a = gaussian_profile(2, 7 * kPi / 20, 2 * kPi / 5, p);
  const auto b = gaussian_profile(7, 7 * kPi / 20, -2 * kPi / 5, p);
  EXPECT_NEAR(std::abs(profile_overlap(b, a)), 0.0666, 5e-5);
}

TEST(Profile, ThirteenSitePacketOverlaps) {
  const auto p = lattice(13);
  const double s = 3 * kPi / 13;
  const auto a = gaussian_profile(6, s, 2 * kPi / 13, p);
  const auto b = gaussian_profile(19, s, -2 * kPi / 13, p);
  const auto c = gaussian_profile(13, s, 2 * kPi / 13, p);
  EXPECT_NEAR(std::abs(profile_overlap(b, a)), 0.0104, 5e-5);
  EXPECT_NEAR(profile_overlap(c, a).real(), -0.0306, 5e-5);
  EXPECT_NEAR(std::abs(profile_overlap(c, b)), 0.0059, 5e-5);
}

TEST(WavePacket, DeltaProfileCollapsesToSingleMomentum) {
  const auto p = lattice(5);
  const KinematicTable t(p);
  const auto ap = fixtures::published_alphas();
  for (std::size_t ik = 0; ik < t.size(); ++ik) {
    const auto w = wavepacket_coefficients(delta_profile(ik, p), ap, t);
    const auto c = order_j_coefficients(ik, 1, ap, t);
    ASSERT_EQ(w.entries.size(), c.entries.size());
    for (const auto& [key, v] : c.entries) EXPECT_EQ(w.entries.at(key), v);
  }
}

TEST(WavePacket, LinearInProfile) {
  const auto p = lattice(5);
  const KinematicTable t(p);
  const auto ap = fixtures::published_alphas();
  const auto a = gaussian_profile(2, 7 * kPi / 20, 2 * kPi / 5, p);
  const auto b = gaussian_profile(7, 7 * kPi / 20, -2 * kPi / 5, p);
  WavePacketProfile sum = a;
  for (std::size_t i = 0; i < sum.values.size(); ++i) sum.values[i] += b.values[i];
  const auto ca = wavepacket_coefficients(a, ap, t), cb = wavepacket_coefficients(b, ap, t);
  const auto cs = wavepacket_coefficients(sum, ap, t);
  for (const auto& [key, v] : cs.entries) {
    cplx expect = 0;
    if (ca.entries.count(key)) expect += ca.entries.at(key);
    if (cb.entries.count(key)) expect += cb.entries.at(key);
    EXPECT_LT(std::abs(v - expect), 1e-14);
  }
}

TEST(WavePacket, FourDominantCoefficientsPerPacket) {
  const auto p = lattice(5);
  const KinematicTable t(p);
  const auto cfg = fixtures::shared_ancilla_config();
  for (const auto& w : cfg.profiles()) {
    const auto c = wavepacket_coefficients(w, cfg.alphas, t);
    const auto q = build_qwp(c, cfg.scheme, p.n_sys(), p, p.n_sys() + 1);
    EXPECT_EQ(q.kept.size(), 4u);
    // Survivors are exactly the four largest magnitudes.
    std::vector<double> mags;
    for (const auto& [key, v] : c.entries) mags.push_back(std::abs(v));
    std::sort(mags.rbegin(), mags.rend());
    for (const auto& k : q.kept) EXPECT_GE(std::abs(c.entries.at({k.m, k.n})), mags[3] - 1e-15);
  }
}

TEST(WavePacket, HermitianPairingExponentiatesToUnitary) {
  const auto p = lattice(2);
  const KinematicTable t(p);
  const auto ap = random_alphas(2, 1, 3);
  const auto c = wavepacket_coefficients(gaussian_profile(1, 0.6, -kPi / 2, p), ap, t);
  const PauliSum g = creation_operator(c, p);
  const oracle::Mat h = oracle::dense((g + g.adjoint()).simplified());
  EXPECT_LT((h - h.adjoint()).norm(), 1e-13);
  const oracle::Mat u = oracle::expm_herm(h, 0.7);
  EXPECT_LT((u.adjoint() * u - oracle::Mat::Identity(u.rows(), u.cols())).norm(), 1e-12);
}

TEST(WavePacket, AnnihilatorNearlyKillsVacuum) {
  const auto p = lattice(5);
  const SpectrumOracle o(p, 8);
  const KinematicTable t(p);
  const auto ap = fixtures::published_alphas();
  const auto omega = vacuum(o);
  for (std::size_t ik = 0; ik < t.size(); ++ik) {
    const PauliSum b = creation_operator(order_j_coefficients(ik, 1, ap, t), p).adjoint();
    const auto v = b.apply(omega);
    EXPECT_LT(inner(v, v).real(), 0.05) << "label " << momentum_labels(5)[ik];
  }
}

class Commutator : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const auto p = lattice(5);
    const SpectrumOracle o(p, 8);
    const KinematicTable t(p);
    const auto ap = fixtures::published_alphas();
    const auto omega = vacuum(o);
    for (std::size_t ik = 0; ik < t.size(); ++ik) {
      const PauliSum bd = creation_operator(order_j_coefficients(ik, 1, ap, t), p);
      create_.push_back(bd.apply(omega));
      annihilate_.push_back(bd.adjoint().apply(omega));
    }
  }
  // <Omega| b_a b_b^dag - b_b^dag b_a |Omega>
  static cplx value(std::size_t a, std::size_t b) {
    return inner(create_[a], create_[b]) - inner(annihilate_[b], annihilate_[a]);
  }
  static inline std::vector<std::vector<cplx>> create_, annihilate_;
};

TEST_F(Commutator, DistinctMomentaNearlyCommute) {
  for (std::size_t a = 0; a < create_.size(); ++a)
    for (std::size_t b = 0; b < create_.size(); ++b)
      if (a != b) {
        EXPECT_LT(std::abs(value(a, b)), 0.05) << a << "," << b;
      }
}

TEST_F(Commutator, EqualMomentaNearlyCanonical) {
  for (std::size_t a = 0; a < create_.size(); ++a) EXPECT_LT(std::abs(value(a, a) - 1.0), 0.05) << "label " << momentum_labels(5)[a];
}
