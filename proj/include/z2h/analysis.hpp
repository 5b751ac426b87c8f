#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "z2h/circuits.hpp"
#include "z2h/model.hpp"
#include "z2h/simulator.hpp"

namespace z2h {

struct FilterReport {
  ShotCounts kept;
  std::uint64_t input_total = 0;
  std::uint64_t after_q_total = 0;
  double q_violation_rate = 0.0;
  double ancilla_violation_rate = 0.0;
};

template <class Keep>
ShotCounts select_counts(const ShotCounts& in, Keep keep) {
  ShotCounts out;
  out.seed = in.seed;
  out.n_qubits = in.n_qubits;
  for (const auto& [b, n] : in.counts)
    if (keep(b)) out.add(b, n);
  return out;
}

// Drop outcomes whose fermion register does not hold N_P particles.
inline FilterReport filter_q(const ShotCounts& counts, const LatticeParams& p) {
  FilterReport r;
  r.kept = select_counts(counts, [&](u64 b) { return in_sector(p, b); });
  r.input_total = counts.total;
  r.after_q_total = r.kept.total;
  r.q_violation_rate = counts.total ? 1.0 - static_cast<double>(r.kept.total) / static_cast<double>(counts.total) : 0.0;
  return r;
}

// Keep outcomes matching the accept pattern; the rate is relative to the post-Q sample.
inline FilterReport filter_ancilla(const FilterReport& in, const AcceptPattern& accept) {
  FilterReport r = in;
  r.kept = select_counts(in.kept, [&](u64 b) { return accept.accepts(b); });
  r.ancilla_violation_rate =
      in.kept.total ? 1.0 - static_cast<double>(r.kept.total) / static_cast<double>(in.kept.total) : 0.0;
  return r;
}

inline void require_nonempty(const ShotCounts& c, const char* what) {
  if (c.total == 0) throw Error(std::string(what) + ": empty sample");
}

// chi_n: occupation on even sites, vacancy on odd ones.
inline std::vector<double> staggered_density(const ShotCounts& kept, const LatticeParams& p) {
  require_nonempty(kept, "staggered_density");
  const int N = p.n_stag();
  std::vector<double> chi(static_cast<std::size_t>(N), 0.0);
  for (const auto& [b, n] : kept.counts)
    for (int s = 0; s < N; ++s) {
      const bool occ = (b >> s) & 1u;
      if ((s % 2 == 0) == occ) chi[static_cast<std::size_t>(s)] += static_cast<double>(n);
    }
  for (auto& v : chi) v /= static_cast<double>(kept.total);
  return chi;
}

// Mean of +1 (boson bit 0) and -1 (bit 1).
inline double electric_field(const ShotCounts& kept, const LatticeParams& p) {
  require_nonempty(kept, "electric_field");
  double s = 0;
  for (const auto& [b, n] : kept.counts) s += ((b >> p.boson()) & 1u) ? -static_cast<double>(n) : static_cast<double>(n);
  return s / static_cast<double>(kept.total);
}

// Same observables from exact probabilities, for oracle comparisons.
inline std::vector<double> staggered_density(const std::vector<double>& probs, const LatticeParams& p) {
  const int N = p.n_stag();
  std::vector<double> chi(static_cast<std::size_t>(N), 0.0);
  double tot = 0;
  for (std::size_t b = 0; b < probs.size(); ++b) {
    if (probs[b] == 0) continue;
    tot += probs[b];
    for (int s = 0; s < N; ++s)
      if ((s % 2 == 0) == static_cast<bool>((b >> s) & 1u)) chi[static_cast<std::size_t>(s)] += probs[b];
  }
  if (tot <= 0) throw Error("staggered_density: zero total weight");
  for (auto& v : chi) v /= tot;
  return chi;
}

inline double electric_field(const std::vector<double>& probs, const LatticeParams& p) {
  double s = 0, tot = 0;
  for (std::size_t b = 0; b < probs.size(); ++b) {
    tot += probs[b];
    s += ((b >> p.boson()) & 1u) ? -probs[b] : probs[b];
  }
  if (tot <= 0) throw Error("electric_field: zero total weight");
  return s / tot;
}

// Standard deviation of `stat` over multinomial resamples of the kept distribution.
inline double bootstrap_errors(const ShotCounts& kept, const std::function<double(const ShotCounts&)>& stat,
                               int resamples = 100, std::uint64_t seed = 0) {
  if (resamples < 2) throw Error("bootstrap needs at least two resamples");
  require_nonempty(kept, "bootstrap_errors");
  std::vector<u64> outcomes;
  std::vector<double> probs;
  for (const auto& [b, n] : kept.counts) {
    outcomes.push_back(b);
    probs.push_back(static_cast<double>(n) / static_cast<double>(kept.total));
  }
  std::mt19937_64 rng(seed);
  double m = 0, m2 = 0;
  for (int r = 0; r < resamples; ++r) {
    const ShotCounts draw = sample_probabilities(probs, kept.total, rng);
    ShotCounts re;
    re.n_qubits = kept.n_qubits;
    for (const auto& [i, n] : draw.counts) re.add(outcomes[i], n);
    const double v = stat(re);
    m += v;
    m2 += v * v;
  }
  m /= resamples;
  const double var = m2 / resamples - m * m;
  return std::sqrt(std::max(var, 0.0) * resamples / (resamples - 1));
}

// p0 - p1 of one qubit.
inline double ancilla_contrast(const ShotCounts& c, int qubit) {
  require_nonempty(c, "ancilla_contrast");
  double s = 0;
  for (const auto& [b, n] : c.counts) s += ((b >> qubit) & 1u) ? -static_cast<double>(n) : static_cast<double>(n);
  return s / static_cast<double>(c.total);
}

struct ReturnProbability {
  double re = 0;
  double im = 0;
  double value = 0;
};

inline ReturnProbability return_probability(const ShotCounts& re_counts, const ShotCounts& im_counts, int test_qubit) {
  ReturnProbability r;
  r.re = ancilla_contrast(re_counts, test_qubit);
  r.im = ancilla_contrast(im_counts, test_qubit);
  r.value = r.re * r.re + r.im * r.im;
  return r;
}

struct ObservableSeries {
  std::string label;
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> errors;

  void push(double t, double v, double e) {
    times.push_back(t);
    values.push_back(v);
    errors.push_back(e);
  }
  void validate() const {
    if (times.size() != values.size() || values.size() != errors.size())
      throw Error("observable series '" + label + "' has ragged columns");
    for (double e : errors)
      if (e < 0) throw Error("observable series '" + label + "' has a negative error");
  }
};

// E(t) / (1 - rho(t)) with rho(t) = 1 - E'(t)/e0, i.e. E(t) e0 / E'(t); relative errors
// of E and E' combined in quadrature.
inline ObservableSeries odr_rescale(const ObservableSeries& series, const ObservableSeries& identity, double e0) {
  series.validate();
  identity.validate();
  if (series.times != identity.times) throw Error("odr_rescale: time grids differ");
  if (e0 == 0.0) throw Error("odr_rescale: reference value is zero");
  ObservableSeries out{series.label + "_odr", {}, {}, {}};
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    const double keep = identity.values[i] / e0;  // 1 - rho
    if (std::abs(keep) < 1e-6) throw Error("odr_rescale: decay factor too close to zero at t = " +
                                           std::to_string(series.times[i]));
    const double v = series.values[i] / keep;
    const double rel_id = identity.errors[i] / std::abs(identity.values[i]);
    const double err = std::sqrt(std::pow(series.errors[i] / keep, 2) + std::pow(v * rel_id, 2));
    out.push(series.times[i], v, err);
  }
  return out;
}

}  // namespace z2h
