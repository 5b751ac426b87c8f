#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "z2h/z2h.hpp"

namespace z2h::app {

// Output file name -> contents. Commands build these in memory; nothing touches the
// disk until a command has finished.
using Files = std::map<std::string, std::string>;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// ---- variational stage ---------------------------------------------------------------

struct GroundResult {
  GroundStateAngles angles;
  double energy = 0;
  double exact_energy = 0;
  double fidelity = 0;
  std::size_t evaluations = 0;
  bool optimized = false;
};

GroundResult solve_ground(const RunConfig& c, const SpectrumOracle& oracle);

struct AnsatzRow {
  int label = 0;
  int order = 0;
  std::vector<double> alphas;   // (d, parity) pairs, parity fastest
  double objective = 0;         // value of the optimized objective
  double energy = 0;            // exact b^dagger |Omega> energy at these alphas
  double exact_energy = 0;      // ED meson energy for the label
  double fidelity = 0;          // against the ED meson state
  std::size_t evaluations = 0;  // 0 for pinned parameters
};

struct AnsatzFit {
  AnsatzParams params{1};
  std::vector<AnsatzRow> rows;
};

// Circuit objective (Q_WP with vqe_wp_trotter_steps splits on the Q_GS vacuum), order by
// order up to c.order. With optimize = false the pinned table is only evaluated.
AnsatzFit fit_ansatz(const RunConfig& c, const SpectrumOracle& oracle, const GroundStateAngles& angles, bool optimize,
                     const std::vector<int>& labels = {});

// Order-by-order scan on the exact ansatz state over the ED vacuum.
AnsatzFit fidelity_scan(const LatticeParams& p, const SpectrumOracle& oracle, int max_order,
                        const NelderMeadOptions& o);

// ---- preparation ---------------------------------------------------------------------

struct Prepared {
  LatticeParams lattice;
  int n_qubits = 0;
  int n_ancillas = 0;
  std::vector<WavePacketProfile> profiles;
  std::vector<MesonCoefficients> coeffs;
  Circuit qgs;
  QinitResult qinit;
  Circuit circuit;  // Q_GS followed by Q_Init
  Statevector state;

  u64 ancilla_bits() const { return qinit.accept.value >> lattice.n_sys(); }
};

// `extra_qubits` idle qubits are appended above the packet ancillas.
Prepared prepare(const RunConfig& c, int extra_qubits = 0);

struct Branch {
  CVec state;  // normalized, on the charge sector
  double weight = 0;
};

Branch accepted_branch(const Statevector& s, const Prepared& prep, const SectorBasis& basis);

// b^dagger_{Psi_n} ... b^dagger_{Psi_1} |Omega_ED>, normalized; identity for no packets.
CVec ideal_packets(const RunConfig& c, const SpectrumOracle& oracle);

// Exact outcome probabilities with Q-violating and rejected-ancilla outcomes zeroed.
std::vector<double> filtered_probabilities(const Statevector& s, const LatticeParams& p, const AcceptPattern& accept);

// ---- observables from shots -----------------------------------------------------------

struct Snapshot {
  FilterReport report;
  std::vector<double> chi, chi_err;
  double e = 0, e_err = 0;
};

Snapshot measure(const ShotCounts& raw, const LatticeParams& p, const AcceptPattern& accept, int resamples,
                 std::uint64_t seed);

struct EvolutionRun {
  std::vector<double> times;
  std::vector<Snapshot> shots;
  std::vector<std::vector<double>> exact_chi;  // noiseless circuit, filtered, no sampling
  std::vector<double> exact_e;
};

EvolutionRun evolve_noiseless(const RunConfig& c, const Prepared& prep, double dt, int n_steps);

struct NoisySeries {
  std::vector<double> times;
  std::vector<Snapshot> shots;
  ObservableSeries e;
};

// Trajectory sampling of the CNOT-level circuit `tail` appended to the preparation; one
// sample per trajectory after the preparation and after every "step" span of `tail`.
// twirl_circuits > 0 splits the trajectories over that many twirled copies.
NoisySeries run_noisy_series(const RunConfig& c, const Prepared& prep, const Circuit& tail, double dt,
                             int twirl_circuits, std::uint64_t seed);

struct OdrResult {
  std::vector<double> times;
  std::vector<double> noiseless;  // exact E(t) of the Trotterized circuit
  NoisySeries raw, twirled, identity;
  ObservableSeries mitigated;
  double e0 = 0;
};

OdrResult twirl_odr(const RunConfig& c, const Prepared& prep);

// ---- return probability ----------------------------------------------------------------

struct ReturnSeries {
  std::vector<double> times;
  std::vector<ReturnProbability> values;  // sampled
  std::vector<double> errors;
  std::vector<ReturnProbability> exact;   // same circuits, exact ancilla contrast
};

// `prep` must carry one extra qubit (the test ancilla, highest index).
ReturnSeries return_probability_series(const RunConfig& c, const Prepared& prep, double dt,
                                       const std::vector<double>& times);

std::vector<double> return_times(const RunConfig& c);

// ---- commands --------------------------------------------------------------------------

Files cmd_vqe(const RunConfig& c);
Files cmd_prepare(const RunConfig& c);
Files cmd_evolve(const RunConfig& c);
Files cmd_return_prob(const RunConfig& c);
Files cmd_oracle(const RunConfig& c);
Files cmd_twirl_odr(const RunConfig& c);

std::string sha256_hex(const std::string& data);

// Writes every file plus manifest.json into c.out_dir.
void write_outputs(const RunConfig& c, const std::string& command, const Files& files);

}  // namespace z2h::app
