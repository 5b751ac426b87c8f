#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "z2h/z2h.hpp"

namespace z2h::app {

struct PacketSpec {
  double mu = 0;
  double sigma = 1;
  double kbar = 0;
};

struct NoiseSettings {
  double p1 = 0.0;
  double p2 = 0.0;
  std::uint64_t trajectories = 3000;
  bool twirl = false;
  int twirl_circuits = 10;
  bool enabled() const { return p1 > 0 || p2 > 0; }
};

struct RunConfig {
  LatticeParams lattice;

  GroundStateAngles ground{0.17016, 0.78538};
  BondOrder bond_order = BondOrder::EvenOdd;
  bool optimize_ground = false;

  int order = 1;
  AnsatzParams alphas{1};
  bool optimize_ansatz = false;
  int vqe_wp_trotter_steps = 10;
  NelderMeadOptions optimizer;

  std::vector<PacketSpec> packets;
  PrepScheme scheme;
  EvolutionPlan evolution;
  std::vector<double> return_times;  // empty: every integer multiple of dt up to n_steps

  std::uint64_t shots = 500000;
  std::uint64_t seed = 1234;
  int bootstrap_resamples = 100;
  NoiseSettings noise;

  std::string out_dir = "out";
  std::string source_text;  // verbatim configuration, hashed into the manifest

  void validate() const;
  std::vector<WavePacketProfile> profiles() const;
};

// Defaults: N_P = 5, m_f = 1, eps = -0.3, the two-packet setup with one shared ancilla.
RunConfig default_config();

RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

// YAML block for an ansatz table, keyed by momentum label.
std::string alphas_yaml(const AnsatzParams& ap, int indent = 2);

}  // namespace z2h::app
