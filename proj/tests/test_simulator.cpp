#include <gtest/gtest.h>

#include <random>
#include <numeric>

#include "oracle.hpp"
#include "z2h/z2h.hpp"

using namespace z2h;

namespace {

Circuit random_circuit(int n, int depth, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> kind(0, static_cast<int>(GateKind::CRYXY));
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  Circuit c(n);
  while (static_cast<int>(c.size()) < depth) {
    const auto k = static_cast<GateKind>(kind(rng));
    const int ar = gate_arity(k);
    std::vector<int> q(static_cast<std::size_t>(n));
    std::iota(q.begin(), q.end(), 0);
    std::shuffle(q.begin(), q.end(), rng);
    q.resize(static_cast<std::size_t>(ar));
    Gate g{k, q};
    if (has_angle(k)) g.angle = ang(rng);
    if (is_controlled(k)) g.control_state = static_cast<int>(rng() & 1u);
    c.add(g);
  }
  return c;
}

Statevector random_statevector(int n, std::uint64_t seed) {
  const oracle::Vec v = oracle::random_state(Eigen::Index{1} << n, seed);
  return Statevector(n, std::vector<cplx>(v.data(), v.data() + v.size()));
}

double total_variation(const ShotCounts& c, const std::vector<double>& p) {
  double tv = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto it = c.counts.find(i);
    const double f = it == c.counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(c.total);
    tv += std::abs(f - p[i]);
  }
  return tv / 2;
}

}  // namespace

TEST(Run, CnotFlipsTargetWhenControlSet) {
  Circuit c(2);
  c.cnot(0, 1);
  const auto s = run(c, Statevector(2, 0b01));
  EXPECT_NEAR(std::abs(s[0b11]), 1.0, 1e-15);
  const auto off = run(c, Statevector(2, 0b10));
  EXPECT_NEAR(std::abs(off[0b10]), 1.0, 1e-15);
  Circuit neg(2);
  neg.cnot(0, 1, 0);
  EXPECT_NEAR(std::abs(run(neg, Statevector(2, 0b00))[0b10]), 1.0, 1e-15);
}

TEST(Run, RzOnBasisStateIsPhaseOnly) {
  Circuit c(1);
  c.rz(0, 0.83);
  const auto s = run(c, Statevector(1, 0));
  EXPECT_NEAR(std::norm(s[0]), 1.0, 1e-15);
  EXPECT_NEAR(std::arg(s[0]), -0.83 / 2, 1e-15);
  EXPECT_EQ(s[1], cplx(0));
}

TEST(Run, RandomSixQubitCircuitsMatchDenseProduct) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Circuit c = random_circuit(6, 60, seed);
    const auto in = random_statevector(6, seed + 100);
    const oracle::Vec expect = oracle::circuit_matrix(c) * oracle::to_vec(in);
    EXPECT_LT((oracle::to_vec(run(c, in)) - expect).norm(), 1e-10) << "seed " << seed;
  }
}

TEST(Run, WidthMismatchThrows) {
  EXPECT_THROW(run(Circuit(3), Statevector(2)), Error);
  Circuit c(2);
  EXPECT_THROW(c.cnot(0, 2), Error);
  EXPECT_THROW(c.cnot(1, 1), Error);
}

TEST(Run, NormPreservedAtDepthTenThousand) {
  const Circuit c = random_circuit(6, 10000, 42);
  EXPECT_NEAR(run(c, random_statevector(6, 5)).norm(), 1.0, 1e-10);
}

TEST(Run, GateLeavesComplementReducedStateAlone) {
  // Product input; a gate on {1, 2} must not touch the reduced state of {0, 3}.
  oracle::Vec v = oracle::Vec::Ones(1);
  for (int q = 3; q >= 0; --q) v = oracle::kron(v, oracle::random_state(2, 10 + q));
  auto reduced = [](const oracle::Vec& psi) {
    oracle::Mat r = oracle::Mat::Zero(4, 4);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int s = 0; s < 4; ++s) {
          auto idx = [&](int c) { return (c & 1) | ((s & 3) << 1) | ((c >> 1) << 3); };
          r(a, b) += psi[idx(a)] * std::conj(psi[idx(b)]);
        }
    return r;
  };
  for (auto k : {GateKind::CNOT, GateKind::RZZ, GateKind::RYY, GateKind::CRZ}) {
    Circuit c(4);
    Gate g{k, {1, 2}};
    if (has_angle(k)) g.angle = 1.1;
    c.add(g);
    const Statevector in(4, std::vector<cplx>(v.data(), v.data() + v.size()));
    EXPECT_LT((reduced(oracle::to_vec(run(c, in))) - reduced(v)).norm(), 1e-14);
  }
}

TEST(Circuit, DumpParseRoundTrip) {
  const Circuit c = random_circuit(6, 200, 9);
  const Circuit back = Circuit::parse(c.dump(), 6);
  ASSERT_EQ(back.size(), c.size());
  EXPECT_EQ(back.dump(), c.dump());
  const auto in = random_statevector(6, 1);
  EXPECT_LT((oracle::to_vec(run(back, in)) - oracle::to_vec(run(c, in))).norm(), 1e-12);
  EXPECT_THROW(Circuit::parse("FOO q0\n", 2), Error);
}

TEST(Expectation, ZOnAllZeros) {
  EXPECT_NEAR(expectation(Statevector(3), PauliSum::single(3, 0, 'Z')), 1.0, 1e-15);
  EXPECT_NEAR(expectation(Statevector(3, 1), PauliSum::single(3, 0, 'Z')), -1.0, 1e-15);
}

TEST(Expectation, DenseQuadraticFormAtSixQubits) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  PauliSum h(6);
  for (int t = 0; t < 30; ++t) {
    PauliWord w;
    for (int q = 0; q < 6; ++q) w.set(q, "IXYZ"[rng() % 4]);
    h.add(u(rng), w);
  }
  const auto s = random_statevector(6, 3);
  const oracle::Vec v = oracle::to_vec(s);
  const cplx expect = v.dot(oracle::dense(h) * v);
  const auto r = expectation_detail(s, h);
  EXPECT_NEAR(r.value, expect.real(), 1e-10);
  EXPECT_LT(std::abs(r.imag_residue), 1e-10);
}

TEST(Expectation, RejectsNonHermitian) {
  PauliSum a(2);
  a.add(cplx(0, 1), "XI");
  EXPECT_THROW(expectation(Statevector(2), a), Error);
}

TEST(Sample, BasisStateGetsAllShots) {
  const auto c = sample(Statevector(4, 0b1011), 1000, 5);
  ASSERT_EQ(c.counts.size(), 1u);
  EXPECT_EQ(c.counts.at(0b1011), 1000u);
  EXPECT_EQ(c.total, 1000u);
  EXPECT_THROW(sample(Statevector(1), 0, 1), Error);
}

TEST(Sample, UniformQubitWithinFiveSigma) {
  Circuit h(1);
  h.h(0);
  const auto c = sample(run(h, Statevector(1)), 1000000, 77);
  const double sigma = std::sqrt(0.25 / 1e6);
  std::uint64_t sum = 0;
  for (const auto& [b, n] : c.counts) {
    EXPECT_NEAR(static_cast<double>(n) / 1e6, 0.5, 5 * sigma);
    sum += n;
  }
  EXPECT_EQ(sum, c.total);
}

TEST(Sample, TotalVariationShrinksAsInverseRootShots) {
  const auto s = random_statevector(4, 8);
  const auto p = probabilities(s);
  auto mean_tv = [&](std::uint64_t shots) {
    double acc = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) acc += total_variation(sample(s, shots, seed), p);
    return acc / 40;
  };
  const double ratio = mean_tv(1000) / mean_tv(100000);
  EXPECT_GT(ratio, 10.0 * 0.75);
  EXPECT_LT(ratio, 10.0 * 1.25);
}

TEST(Sample, DeterministicUnderSeed) {
  const auto s = random_statevector(5, 2);
  EXPECT_EQ(sample(s, 5000, 11).counts, sample(s, 5000, 11).counts);
  EXPECT_NE(sample(s, 5000, 11).counts, sample(s, 5000, 12).counts);
}

TEST(Noisy, ZeroRatesMatchIdealDistribution) {
  const Circuit c = random_circuit(3, 20, 3);
  const auto ideal = probabilities(run(c, Statevector(3)));
  const std::uint64_t n = 20000;
  const auto r = run_noisy(c, Statevector(3), NoiseModel{0, 0, 5}, n);
  ASSERT_EQ(r.checkpoints.size(), 1u);
  for (std::size_t b = 0; b < ideal.size(); ++b) {
    const auto it = r.checkpoints[0].counts.find(b);
    const double f = it == r.checkpoints[0].counts.end() ? 0.0 : static_cast<double>(it->second) / n;
    const double sigma = std::sqrt(std::max(ideal[b] * (1 - ideal[b]), 1e-12) / n);
    EXPECT_NEAR(f, ideal[b], 5 * sigma + 1e-12) << b;
  }
  for (const auto& log : r.logs) EXPECT_EQ(log.injections, 0u);
}

TEST(Noisy, CompoundingOnIdentityCircuit) {
  // 100 zero-angle two-qubit rotations on |00>. The flip pattern of each injected Pauli is 00
  // with probability 3/15 and each nonzero pattern with 4/15, so every nontrivial character
  // of Z2 x Z2 decays by lambda = 1 - 16 p / 15 per gate.
  Circuit c(2);
  for (int i = 0; i < 100; ++i) c.add(Gate{GateKind::RZZ, {0, 1}, 0.0});
  const double p2 = 0.01;
  const std::uint64_t n = 20000;
  const auto r = run_noisy(c, Statevector(2), NoiseModel{0, p2, 21}, n);
  const double lam = std::pow(1 - 16 * p2 / 15, 100);
  const double expect = 0.75 * (1 - lam);
  const auto it = r.checkpoints[0].counts.find(0);
  const double clean = it == r.checkpoints[0].counts.end() ? 0.0 : static_cast<double>(it->second);
  const double corrupted = 1 - clean / n;
  EXPECT_NEAR(corrupted, expect, 5 * std::sqrt(expect * (1 - expect) / n));
}

TEST(Noisy, ChargeFlipsTrackXYInjectionParity) {
  // Diagonal single-qubit circuit: each X or Y injection flips exactly one bit.
  Circuit c(6);
  for (int i = 0; i < 300; ++i) c.rz(i % 6, 0.1 * i);
  const u64 init = 0b010101;
  const NoiseModel nm{0.02, 0, 8};
  std::vector<u64> out;
  int flagged = 0, odd = 0;
  for (std::uint64_t t = 0; t < 2000; ++t) {
    auto rng = trajectory_rng(nm.seed, t);
    TrajectoryLog log;
    run_trajectory(c, Statevector(6, init), nm, {c.size()}, rng, out, log);
    const bool q_changed = popcount(out.at(0)) != popcount(init);
    const bool parity = (popcount(out[0]) - popcount(init)) % 2 != 0;
    EXPECT_EQ(parity, log.xy_injections % 2 == 1);
    if (log.xy_injections == 0) {
      EXPECT_FALSE(q_changed);
    }
    flagged += q_changed;
    odd += log.xy_injections % 2;
  }
  EXPECT_GT(odd, 0);
  EXPECT_GE(flagged, odd);
}

TEST(Noisy, DeterministicAndCheckpointed) {
  const Circuit c = random_circuit(4, 40, 12);
  const NoiseModel nm{0.01, 0.02, 99};
  const auto a = run_noisy(c, Statevector(4), nm, 500, {0, 20, 40});
  const auto b = run_noisy(c, Statevector(4), nm, 500, {0, 20, 40});
  ASSERT_EQ(a.checkpoints.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.checkpoints[i].counts, b.checkpoints[i].counts);
    EXPECT_EQ(a.checkpoints[i].total, 500u);
  }
  EXPECT_EQ(a.checkpoints[0].counts.size(), 1u);  // before any gate
  EXPECT_THROW(run_noisy(c, Statevector(4), nm, 10, {41}), Error);
  EXPECT_THROW(run_noisy(c, Statevector(4), NoiseModel{1.5, 0, 0}, 10), ConfigError);
}
