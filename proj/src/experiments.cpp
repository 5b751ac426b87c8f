#include "experiments.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#ifndef Z2H_VERSION
#define Z2H_VERSION "0.0.0"
#endif

namespace z2h::app {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

class Csv {
 public:
  explicit Csv(std::initializer_list<const char*> header) {
    bool first = true;
    for (const char* h : header) {
      out_ << (first ? "" : ",") << h;
      first = false;
    }
    out_ << '\n';
  }
  template <class... Ts>
  void row(const Ts&... v) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(v), first = false), ...);
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
  std::ostringstream out_;
};

std::size_t zone_index(int label, int n_phys) {
  const auto labels = momentum_labels(n_phys);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return i;
  throw Error("momentum label " + std::to_string(label) + " outside the zone");
}

CVec meson_reference(const SpectrumOracle& oracle, int label) {
  const auto idx = oracle.meson_state(label);
  if (!idx) throw Error("no mesonic reference state found for label " + std::to_string(label));
  return oracle.solution().state(*idx);
}

double meson_energy(const SpectrumOracle& oracle, int label) {
  const auto idx = oracle.meson_state(label);
  if (!idx) throw Error("no mesonic reference state found for label " + std::to_string(label));
  return oracle.solution().energies[*idx];
}

// Step count for time t on a grid of spacing dt.
int steps_for(double t, double dt) {
  const double n = t / dt;
  if (std::abs(n - std::round(n)) > 1e-9) throw ConfigError("time " + num(t) + " is not a multiple of dt = " + num(dt));
  return static_cast<int>(std::lround(n));
}

ShotCounts sample_with(const std::vector<double>& probs, std::uint64_t shots, std::uint64_t seed, int n_qubits) {
  std::mt19937_64 rng(seed);
  auto sc = sample_probabilities(probs, shots, rng);
  sc.seed = seed;
  sc.n_qubits = n_qubits;
  return sc;
}

PrepScheme objective_scheme(const RunConfig& c) {
  PrepScheme s = c.scheme;
  s.ancillas = 1;
  s.wp_trotter_steps = c.vqe_wp_trotter_steps;
  s.theta_cutoff = 0.0;
  return s;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// ---- variational stage ---------------------------------------------------------------

GroundResult solve_ground(const RunConfig& c, const SpectrumOracle& oracle) {
  GroundResult r;
  r.angles = c.ground;
  if (c.optimize_ground) {
    const auto rep = optimize_ground(c.lattice, c.optimizer, c.bond_order);
    r.angles.theta_h = rep.best_params[0];
    r.angles.theta_m = rep.best_params[1];
    r.evaluations = rep.evaluations;
    r.optimized = true;
  }
  const Statevector s = prepare_ground(r.angles, c.lattice, -1, c.bond_order);
  r.energy = expectation(s, oracle.hamiltonian());
  r.exact_energy = oracle.ground_energy();
  r.fidelity = fidelity(to_cvec(oracle.basis().project(s.amplitudes())), oracle.ground_state());
  return r;
}

AnsatzFit fit_ansatz(const RunConfig& c, const SpectrumOracle& oracle, const GroundStateAngles& angles, bool optimize,
                     const std::vector<int>& labels_in) {
  const LatticeParams& p = c.lattice;
  const std::vector<int> labels = labels_in.empty() ? momentum_labels(p.n_phys) : labels_in;
  const Statevector vacuum = prepare_ground(angles, p, p.n_sys() + 1, c.bond_order);
  AnsatzFit fit;
  fit.params = optimize ? AnsatzParams(c.order) : c.alphas;
  fit.params.set_order(c.order);
  for (int label : labels) {
    const std::size_t ik = zone_index(label, p.n_phys);
    const CVec target = meson_reference(oracle, label);
    const int j0 = optimize ? 1 : c.order;
    for (int j = j0; j <= c.order; ++j) {
      WavePacketEnergy obj(p, ik, j, vacuum, objective_scheme(c));
      AnsatzRow row;
      row.label = label;
      row.order = j;
      AnsatzParams at_j = fit.params;
      at_j.set_order(j);
      if (optimize) {
        const auto rep = optimize_ansatz(obj, j, fit.params, c.optimizer);
        unpack_alphas(fit.params, label, j, rep.best_params);
        at_j = fit.params;
        at_j.set_order(j);
        row.objective = rep.best_energy;
        row.evaluations = rep.evaluations;
      } else {
        row.objective = obj.energy(at_j);
      }
      AnsatzEnergy exact(p, ik, j, oracle.ground_state());
      row.alphas = pack_alphas(at_j, label, j);
      row.energy = exact.energy(at_j);
      row.exact_energy = meson_energy(oracle, label);
      row.fidelity = fidelity(exact.state(at_j), target);
      fit.rows.push_back(row);
    }
  }
  return fit;
}

AnsatzFit fidelity_scan(const LatticeParams& p, const SpectrumOracle& oracle, int max_order,
                        const NelderMeadOptions& o) {
  AnsatzFit fit;
  fit.params = AnsatzParams(max_order);
  for (int label : momentum_labels(p.n_phys)) {
    const std::size_t ik = zone_index(label, p.n_phys);
    const CVec target = meson_reference(oracle, label);
    for (int j = 1; j <= max_order; ++j) {
      AnsatzEnergy obj(p, ik, j, oracle.ground_state());
      const auto rep = optimize_ansatz(obj, j, fit.params, o);
      unpack_alphas(fit.params, label, j, rep.best_params);
      AnsatzParams at_j = fit.params;
      at_j.set_order(j);
      AnsatzRow row;
      row.label = label;
      row.order = j;
      row.alphas = rep.best_params;
      row.objective = rep.best_energy;
      row.energy = rep.best_energy;
      row.exact_energy = meson_energy(oracle, label);
      row.fidelity = fidelity(obj.state(at_j), target);
      row.evaluations = rep.evaluations;
      fit.rows.push_back(row);
    }
  }
  return fit;
}

// ---- preparation ---------------------------------------------------------------------

Prepared prepare(const RunConfig& c, int extra_qubits) {
  Prepared r;
  r.lattice = c.lattice;
  const LatticeParams& p = c.lattice;
  r.profiles = c.profiles();
  r.n_ancillas = ancillas_needed(static_cast<int>(r.profiles.size()), c.scheme.ancillas);
  r.n_qubits = p.n_sys() + r.n_ancillas + extra_qubits;
  if (r.n_qubits > 26) throw ResourceError("register of " + std::to_string(r.n_qubits) + " qubits exceeds the 26-qubit guard");
  const KinematicTable table(p);
  AnsatzParams ap = c.alphas;
  ap.set_order(c.order);
  for (const auto& w : r.profiles) r.coeffs.push_back(wavepacket_coefficients(w, ap, table));
  r.qgs = build_qgs(c.ground, p, r.n_qubits, c.bond_order);
  PrepScheme s = c.scheme;
  s.order = c.order;
  r.qinit = build_qinit(r.coeffs, s, p, p.n_sys(), r.n_qubits);
  r.circuit = Circuit(r.n_qubits);
  r.circuit.append(r.qgs, "qgs");
  r.circuit.append(r.qinit.circuit, "qinit");
  r.state = run(r.circuit, scv_statevector(p, r.n_qubits));
  return r;
}

Branch accepted_branch(const Statevector& s, const Prepared& prep, const SectorBasis& basis) {
  Branch b;
  b.state = to_cvec(basis.project(s.amplitudes(), prep.ancilla_bits()));
  b.weight = b.state.squaredNorm();
  if (b.weight < 1e-14) throw Error("accepted branch has vanishing weight");
  b.state /= std::sqrt(b.weight);
  return b;
}

CVec ideal_packets(const RunConfig& c, const SpectrumOracle& oracle) {
  const LatticeParams& p = c.lattice;
  const KinematicTable table(p);
  AnsatzParams ap = c.alphas;
  ap.set_order(c.order);
  CVec v = oracle.ground_state();
  for (const auto& w : c.profiles()) {
    const SpMat b = sector_sparse(creation_operator(wavepacket_coefficients(w, ap, table), p), oracle.basis());
    v = b * v;
    const double n = v.norm();
    if (n < 1e-14) throw Error("ideal wave-packet state vanishes");
    v /= n;
  }
  return v;
}

std::vector<double> filtered_probabilities(const Statevector& s, const LatticeParams& p, const AcceptPattern& accept) {
  std::vector<double> pr = probabilities(s);
  for (std::size_t b = 0; b < pr.size(); ++b)
    if (!in_sector(p, b) || !accept.accepts(b)) pr[b] = 0.0;
  return pr;
}

// ---- observables from shots -----------------------------------------------------------

Snapshot measure(const ShotCounts& raw, const LatticeParams& p, const AcceptPattern& accept, int resamples,
                 std::uint64_t seed) {
  Snapshot s;
  s.report = filter_ancilla(filter_q(raw, p), accept);
  const ShotCounts& kept = s.report.kept;
  require_nonempty(kept, "measure");
  s.chi = staggered_density(kept, p);
  s.e = electric_field(kept, p);
  for (int n = 0; n < p.n_stag(); ++n) {
    const auto site = static_cast<std::size_t>(n);
    s.chi_err.push_back(bootstrap_errors(
        kept, [&](const ShotCounts& k) { return staggered_density(k, p)[site]; }, resamples,
        derive_seed(seed, site)));
  }
  s.e_err = bootstrap_errors(
      kept, [&](const ShotCounts& k) { return electric_field(k, p); }, resamples, derive_seed(seed, 1000));
  return s;
}

EvolutionRun evolve_noiseless(const RunConfig& c, const Prepared& prep, double dt, int n_steps) {
  const LatticeParams& p = c.lattice;
  EvolutionPlan plan = c.evolution;
  plan.dt = dt;
  const Circuit step = build_trotter_step(plan, p, prep.n_qubits);
  EvolutionRun r;
  Statevector s = prep.state;
  for (int i = 0; i <= n_steps; ++i) {
    if (i > 0) s = run(step, std::move(s));
    const auto probs = probabilities(s);
    const auto filt = filtered_probabilities(s, p, prep.qinit.accept);
    // Step 0 shares the preparation stream so an empty evolution matches cmd_prepare.
    const std::uint64_t sd = i == 0 ? derive_seed(c.seed, 1) : derive_seed(c.seed, 100 + static_cast<std::uint64_t>(i));
    r.times.push_back(i * dt);
    r.shots.push_back(measure(sample_with(probs, c.shots, sd, prep.n_qubits), p, prep.qinit.accept,
                              c.bootstrap_resamples, derive_seed(sd, 1)));
    r.exact_chi.push_back(staggered_density(filt, p));
    r.exact_e.push_back(electric_field(filt, p));
  }
  return r;
}

NoisySeries run_noisy_series(const RunConfig& c, const Prepared& prep, const Circuit& tail, double dt,
                             int twirl_circuits, std::uint64_t seed) {
  const LatticeParams& p = c.lattice;
  Circuit full(prep.n_qubits);
  full.append(prep.circuit, "prep");
  full.append(tail, "tail");
  const Circuit base = decompose(full);
  // Twirling inserts gates, so checkpoints are read off each circuit's own spans.
  auto checkpoints_of = [](const Circuit& circ) {
    std::vector<std::size_t> cp{circ.find_segment("tail")->begin};
    for (const auto& sg : circ.segments())
      if (sg.name == "step") cp.push_back(sg.end);
    std::sort(cp.begin(), cp.end());
    return cp;
  };
  const std::size_t n_points = checkpoints_of(base).size();

  std::vector<ShotCounts> pooled(n_points);
  for (auto& sc : pooled) sc.n_qubits = prep.n_qubits;
  const Statevector init = scv_statevector(p, prep.n_qubits);
  const int copies = std::max(twirl_circuits, 1);
  const std::uint64_t total = c.noise.trajectories;
  for (int k = 0; k < copies; ++k) {
    const std::uint64_t n = total / copies + (static_cast<std::uint64_t>(k) < total % copies ? 1 : 0);
    if (n == 0) continue;
    const Circuit circ = twirl_circuits > 0 ? pauli_twirl(base, "elec", derive_seed(seed, 500 + k)) : base;
    NoiseModel nm{c.noise.p1, c.noise.p2, derive_seed(seed, 900 + k)};
    const auto run = run_noisy(circ, init, nm, n, checkpoints_of(circ));
    for (std::size_t i = 0; i < n_points; ++i)
      for (const auto& [b, m] : run.checkpoints[i].counts) pooled[i].add(b, m);
  }
  NoisySeries r;
  r.e.label = "E";
  for (std::size_t i = 0; i < n_points; ++i) {
    const double t = static_cast<double>(i) * dt;
    r.times.push_back(t);
    r.shots.push_back(measure(pooled[i], p, prep.qinit.accept, c.bootstrap_resamples, derive_seed(seed, 2000 + i)));
    r.e.push(t, r.shots.back().e, r.shots.back().e_err);
  }
  return r;
}

OdrResult twirl_odr(const RunConfig& c, const Prepared& prep) {
  if (!c.noise.enabled()) throw ConfigError("twirl-odr needs a noise model (noise.p1 or noise.p2 > 0)");
  const LatticeParams& p = c.lattice;
  const double dt = c.evolution.dt;
  OdrResult r;
  const Circuit evo = build_evolution(c.evolution, p, prep.n_qubits);
  const Circuit ident = build_identity_evolution(c.evolution, p, prep.n_qubits);
  r.raw = run_noisy_series(c, prep, evo, dt, 0, derive_seed(c.seed, 11));
  r.twirled = run_noisy_series(c, prep, evo, dt, c.noise.twirl_circuits, derive_seed(c.seed, 12));
  r.identity = run_noisy_series(c, prep, ident, dt, c.noise.twirl_circuits, derive_seed(c.seed, 13));
  r.times = r.raw.times;

  r.e0 = electric_field(filtered_probabilities(prep.state, p, prep.qinit.accept), p);
  r.mitigated = odr_rescale(r.twirled.e, r.identity.e, r.e0);
  r.mitigated.label = "E_odr";

  const Circuit step = build_trotter_step(c.evolution, p, prep.n_qubits);
  Statevector s = prep.state;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    if (i > 0) s = run(step, std::move(s));
    r.noiseless.push_back(electric_field(filtered_probabilities(s, p, prep.qinit.accept), p));
  }
  return r;
}

// ---- return probability ----------------------------------------------------------------

std::vector<double> return_times(const RunConfig& c) {
  if (!c.return_times.empty()) return c.return_times;
  std::vector<double> t;
  for (int i = 0; i <= c.evolution.n_steps; ++i) t.push_back(i * c.evolution.dt);
  return t;
}

ReturnSeries return_probability_series(const RunConfig& c, const Prepared& prep, double dt,
                                       const std::vector<double>& times) {
  const LatticeParams& p = c.lattice;
  const int test = prep.n_qubits - 1;
  if (test < p.n_sys() + prep.n_ancillas) throw Error("prepared register has no test ancilla");
  std::vector<int> steps;
  for (double t : times) steps.push_back(steps_for(t, dt));
  const int max_steps = steps.empty() ? 0 : *std::max_element(steps.begin(), steps.end());

  EvolutionPlan one = c.evolution;
  one.dt = dt;
  one.n_steps = 1;
  const Circuit cstep = build_controlled_evolution(one, p, test, prep.n_qubits);

  // Per step count, the register after H(test) and that many controlled steps.
  std::map<int, Statevector> at;
  Statevector s = prep.state;
  s.apply(Gate{GateKind::H, {test}});
  const std::set<int> wanted(steps.begin(), steps.end());
  for (int n = 0; n <= max_steps; ++n) {
    if (n > 0) s = run(cstep, std::move(s));
    if (wanted.count(n)) at[n] = s;
  }

  ReturnSeries r;
  const AcceptPattern& acc = prep.qinit.accept;
  for (std::size_t i = 0; i < times.size(); ++i) {
    Statevector re = at.at(steps[i]), im = re;
    re.apply(Gate{GateKind::H, {test}});
    im.apply(Gate{GateKind::RX, {test}, kPi / 2});
    const std::uint64_t sd = derive_seed(c.seed, 3000 + i);
    const auto kr = filter_ancilla(filter_q(sample_with(probabilities(re), c.shots, sd, prep.n_qubits), p), acc).kept;
    const auto ki =
        filter_ancilla(filter_q(sample_with(probabilities(im), c.shots, derive_seed(sd, 1), prep.n_qubits), p), acc)
            .kept;
    const ReturnProbability v = return_probability(kr, ki, test);
    const double sr = bootstrap_errors(
        kr, [&](const ShotCounts& k) { return ancilla_contrast(k, test); }, c.bootstrap_resamples, derive_seed(sd, 2));
    const double si = bootstrap_errors(
        ki, [&](const ShotCounts& k) { return ancilla_contrast(k, test); }, c.bootstrap_resamples, derive_seed(sd, 3));

    auto contrast = [&](const Statevector& st) {
      const auto pr = filtered_probabilities(st, p, acc);
      double p0 = 0, p1 = 0;
      for (std::size_t b = 0; b < pr.size(); ++b) ((b >> test) & 1u ? p1 : p0) += pr[b];
      return (p0 - p1) / (p0 + p1);
    };
    ReturnProbability ex;
    ex.re = contrast(re);
    ex.im = contrast(im);
    ex.value = ex.re * ex.re + ex.im * ex.im;

    r.times.push_back(times[i]);
    r.values.push_back(v);
    r.errors.push_back(2.0 * std::sqrt(v.re * v.re * sr * sr + v.im * v.im * si * si));
    r.exact.push_back(ex);
  }
  return r;
}

// ---- commands --------------------------------------------------------------------------

namespace {

std::string chi_csv(const std::vector<double>& times, const std::vector<Snapshot>& snaps) {
  Csv csv({"t", "site", "chi", "err"});
  for (std::size_t i = 0; i < snaps.size(); ++i)
    for (std::size_t n = 0; n < snaps[i].chi.size(); ++n)
      csv.row(times[i], static_cast<int>(n), snaps[i].chi[n], snaps[i].chi_err[n]);
  return csv.str();
}

std::string rates_csv(const std::vector<double>& times, const std::vector<Snapshot>& snaps) {
  Csv csv({"t", "shots", "after_q", "kept", "q_violation", "ancilla_violation"});
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    const auto& r = snaps[i].report;
    csv.row(times[i], r.input_total, r.after_q_total, r.kept.total, r.q_violation_rate, r.ancilla_violation_rate);
  }
  return csv.str();
}

void add_counts(Csv& csv, const std::string& what, const GateCounts& g) {
  csv.row(what + "_single_qubit", g.single_qubit);
  csv.row(what + "_cnot", g.cnot);
}

std::string coefficients_csv(const Prepared& prep, const RunConfig& c) {
  Csv csv({"packet", "m", "n", "length", "re", "im", "beta", "kept"});
  const double theta = kPi / (4.0 * c.scheme.wp_trotter_steps);
  for (std::size_t i = 0; i < prep.coeffs.size(); ++i)
    for (const auto& [key, v] : prep.coeffs[i].entries) {
      if (std::abs(v) == 0.0) continue;
      const double beta = theta * std::abs(v) / 2.0;
      csv.row(static_cast<int>(i), key.first, key.second,
              periodic_distance(key.first, key.second, c.lattice.n_stag()), v.real(), v.imag(), beta,
              beta > c.scheme.theta_cutoff ? 1 : 0);
    }
  return csv.str();
}

std::string overlaps_csv(const std::vector<WavePacketProfile>& w) {
  Csv csv({"a", "b", "re", "im", "abs"});
  for (std::size_t a = 0; a < w.size(); ++a)
    for (std::size_t b = a + 1; b < w.size(); ++b) {
      const cplx o = profile_overlap(w[b], w[a]);
      csv.row(static_cast<int>(a), static_cast<int>(b), o.real(), o.imag(), std::abs(o));
    }
  return csv.str();
}

}  // namespace

Files cmd_vqe(const RunConfig& c) {
  const SpectrumOracle oracle(c.lattice);
  const GroundResult g = solve_ground(c, oracle);
  Files f;
  {
    Csv csv({"theta_h", "theta_m", "energy", "exact_energy", "fidelity", "evaluations", "optimized"});
    csv.row(g.angles.theta_h, g.angles.theta_m, g.energy, g.exact_energy, g.fidelity, g.evaluations,
            g.optimized ? 1 : 0);
    f["ground.csv"] = csv.str();
  }
  const AnsatzFit fit = fit_ansatz(c, oracle, g.angles, c.optimize_ansatz);
  {
    Csv csv({"label", "k", "order", "alphas", "objective", "energy", "exact_energy", "fidelity", "evaluations"});
    for (const auto& r : fit.rows) {
      std::string a;
      for (std::size_t i = 0; i < r.alphas.size(); ++i) a += (i ? " " : "") + num(r.alphas[i]);
      csv.row(r.label, momentum(r.label, c.lattice.n_phys), r.order, a, r.objective, r.energy, r.exact_energy,
              r.fidelity, r.evaluations);
    }
    f["ansatz.csv"] = csv.str();
  }
  std::ostringstream y;
  y.precision(17);
  y << "ground:\n  theta_h: " << g.angles.theta_h << "\n  theta_m: " << g.angles.theta_m << "\n"
    << "ansatz:\n  order: " << c.order << "\n  alphas:\n"
    << alphas_yaml(fit.params, 4);
  f["pinned.yaml"] = y.str();
  return f;
}

Files cmd_prepare(const RunConfig& c) {
  const Prepared prep = prepare(c);
  const LatticeParams& p = c.lattice;
  const std::uint64_t sd = derive_seed(c.seed, 1);
  const Snapshot snap = measure(sample_with(probabilities(prep.state), c.shots, sd, prep.n_qubits), p,
                                prep.qinit.accept, c.bootstrap_resamples, derive_seed(sd, 1));
  const auto filt = filtered_probabilities(prep.state, p, prep.qinit.accept);
  double accept = 0;
  for (double v : filt) accept += v;

  Files f;
  Csv sum({"key", "value"});
  sum.row("n_qubits", prep.n_qubits);
  sum.row("packets", prep.profiles.size());
  sum.row("ancillas", prep.n_ancillas);
  sum.row("shots", c.shots);
  sum.row("after_q", snap.report.after_q_total);
  sum.row("kept", snap.report.kept.total);
  sum.row("q_violation", snap.report.q_violation_rate);
  sum.row("ancilla_violation", snap.report.ancilla_violation_rate);
  sum.row("ancilla_violation_exact", 1.0 - accept);
  sum.row("E", snap.e);
  sum.row("E_err", snap.e_err);
  add_counts(sum, "qgs", count_gates(prep.qgs));
  add_counts(sum, "qinit", count_gates(prep.qinit.circuit));
  add_counts(sum, "trotter_step", count_gates(build_trotter_step(c.evolution, p, prep.n_qubits)));
  for (std::size_t i = 0; i < prep.qinit.kept.size(); ++i) {
    std::set<std::pair<int, int>> keys;
    for (const auto& t : prep.qinit.kept[i]) keys.insert({t.m, t.n});
    sum.row("packet" + std::to_string(i) + "_kept_coefficients", keys.size());
  }
  f["prepare.csv"] = sum.str();

  Csv chi({"site", "chi", "err", "chi_exact"});
  const auto exact = staggered_density(filt, p);
  for (std::size_t n = 0; n < snap.chi.size(); ++n) chi.row(static_cast<int>(n), snap.chi[n], snap.chi_err[n], exact[n]);
  f["chi.csv"] = chi.str();
  f["coefficients.csv"] = coefficients_csv(prep, c);
  f["overlaps.csv"] = overlaps_csv(prep.profiles);
  return f;
}

Files cmd_evolve(const RunConfig& c) {
  const Prepared prep = prepare(c);
  Files f;
  if (!c.noise.enabled()) {
    const EvolutionRun r = evolve_noiseless(c, prep, c.evolution.dt, c.evolution.n_steps);
    f["chi.csv"] = chi_csv(r.times, r.shots);
    f["rates.csv"] = rates_csv(r.times, r.shots);
    Csv e({"t", "E", "err", "E_odr", "err_odr", "E_exact_circuit"});
    for (std::size_t i = 0; i < r.times.size(); ++i)
      e.row(r.times[i], r.shots[i].e, r.shots[i].e_err, "", "", r.exact_e[i]);
    f["efield.csv"] = e.str();
    return f;
  }
  if (c.noise.twirl) {
    const OdrResult r = twirl_odr(c, prep);
    f["chi.csv"] = chi_csv(r.times, r.twirled.shots);
    f["rates.csv"] = rates_csv(r.times, r.twirled.shots);
    Csv e({"t", "E", "err", "E_odr", "err_odr", "E_exact_circuit"});
    for (std::size_t i = 0; i < r.times.size(); ++i)
      e.row(r.times[i], r.twirled.e.values[i], r.twirled.e.errors[i], r.mitigated.values[i], r.mitigated.errors[i],
            r.noiseless[i]);
    f["efield.csv"] = e.str();
    return f;
  }
  const Circuit evo = build_evolution(c.evolution, c.lattice, prep.n_qubits);
  const NoisySeries r = run_noisy_series(c, prep, evo, c.evolution.dt, 0, derive_seed(c.seed, 11));
  f["chi.csv"] = chi_csv(r.times, r.shots);
  f["rates.csv"] = rates_csv(r.times, r.shots);
  Csv e({"t", "E", "err", "E_odr", "err_odr"});
  for (std::size_t i = 0; i < r.times.size(); ++i) e.row(r.times[i], r.e.values[i], r.e.errors[i], "", "");
  f["efield.csv"] = e.str();
  return f;
}

Files cmd_twirl_odr(const RunConfig& c) {
  const Prepared prep = prepare(c);
  const OdrResult r = twirl_odr(c, prep);
  Csv csv({"t", "E_noiseless", "E_raw", "err_raw", "E_twirled", "err_twirled", "E_identity", "err_identity", "E_odr",
           "err_odr"});
  for (std::size_t i = 0; i < r.times.size(); ++i)
    csv.row(r.times[i], r.noiseless[i], r.raw.e.values[i], r.raw.e.errors[i], r.twirled.e.values[i],
            r.twirled.e.errors[i], r.identity.e.values[i], r.identity.e.errors[i], r.mitigated.values[i],
            r.mitigated.errors[i]);
  Csv rates({"t", "circuit", "q_violation", "ancilla_violation"});
  auto add = [&](const char* name, const NoisySeries& s) {
    for (std::size_t i = 0; i < s.times.size(); ++i)
      rates.row(s.times[i], name, s.shots[i].report.q_violation_rate, s.shots[i].report.ancilla_violation_rate);
  };
  add("raw", r.raw);
  add("twirled", r.twirled);
  add("identity", r.identity);
  Files f;
  f["odr.csv"] = csv.str();
  f["rates.csv"] = rates.str();
  std::ostringstream e0;
  e0.precision(12);
  e0 << "e0," << r.e0 << "\n";
  f["odr_reference.csv"] = "key,value\n" + e0.str();
  return f;
}

Files cmd_return_prob(const RunConfig& c) {
  const Prepared prep = prepare(c, 1);
  const ReturnSeries r = return_probability_series(c, prep, c.evolution.dt, return_times(c));
  Csv csv({"t", "re", "im", "R", "err", "R_exact_circuit"});
  for (std::size_t i = 0; i < r.times.size(); ++i)
    csv.row(r.times[i], r.values[i].re, r.values[i].im, r.values[i].value, r.errors[i], r.exact[i].value);
  return {{"return_probability.csv", csv.str()}};
}

Files cmd_oracle(const RunConfig& c) {
  const SpectrumOracle oracle(c.lattice);
  const auto& sol = oracle.solution();
  Files f;
  Csv spec({"index", "energy", "label", "k", "flipped_link_weight"});
  for (std::size_t i = 0; i < sol.size(); ++i) {
    const std::string lab = sol.labels[i] ? std::to_string(*sol.labels[i]) : "";
    const std::string k = sol.labels[i] ? num(momentum(*sol.labels[i], c.lattice.n_phys)) : "";
    spec.row(i, sol.energies[i], lab, k, flipped_link_weight(sol.state(i), oracle.basis()));
  }
  f["spectrum.csv"] = spec.str();

  Csv mes({"label", "k", "state_index", "energy"});
  for (int lab : momentum_labels(c.lattice.n_phys)) {
    const auto idx = oracle.meson_state(lab);
    if (!idx) continue;
    mes.row(lab, momentum(lab, c.lattice.n_phys), *idx, sol.energies[*idx]);
  }
  f["mesons.csv"] = mes.str();

  const auto& basis = oracle.basis();
  auto chi_of = [&](const CVec& v) {
    Statevector s(c.lattice.n_sys(), basis.embed(std::span<const cplx>(v.data(), static_cast<std::size_t>(v.size())),
                                                 c.lattice.n_sys()));
    return std::pair(staggered_density(probabilities(s), c.lattice), electric_field(probabilities(s), c.lattice));
  };
  const auto [chi0, e0] = chi_of(oracle.ground_state());
  Csv obs({"state", "site", "chi"});
  for (std::size_t n = 0; n < chi0.size(); ++n) obs.row("vacuum", static_cast<int>(n), chi0[n]);
  Csv ef({"state", "E"});
  ef.row("vacuum", e0);
  if (!c.packets.empty()) {
    const auto [chi1, e1] = chi_of(ideal_packets(c, oracle));
    for (std::size_t n = 0; n < chi1.size(); ++n) obs.row("packets", static_cast<int>(n), chi1[n]);
    ef.row("packets", e1);
    f["overlaps.csv"] = overlaps_csv(c.profiles());
  }
  f["observables.csv"] = obs.str();
  f["efield.csv"] = ef.str();
  return f;
}

// ---- output ----------------------------------------------------------------------------

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

void write_outputs(const RunConfig& c, const std::string& command, const Files& files) {
  namespace fs = std::filesystem;
  const fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + c.out_dir + "': " + ec.message());
  nlohmann::json m;
  m["command"] = command;
  m["version"] = Z2H_VERSION;
  m["seed"] = c.seed;
  m["shots"] = c.shots;
  m["config_sha256"] = sha256_hex(c.source_text);
  m["config"] = c.source_text;
  nlohmann::json outs = nlohmann::json::object();
  for (const auto& [name, body] : files) {
    const fs::path tmp = dir / (name + ".tmp");
    {
      std::ofstream o(tmp, std::ios::binary);
      o << body;
      if (!o) throw Error("cannot write '" + tmp.string() + "'");
    }
    fs::rename(tmp, dir / name);
    outs[name] = sha256_hex(body);
  }
  m["outputs"] = outs;
  std::ofstream o(dir / "manifest.json", std::ios::binary);
  o << m.dump(2) << '\n';
  if (!o) throw Error("cannot write manifest");
}

}  // namespace z2h::app
