#include "config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace z2h::app {

namespace {

std::string where(const YAML::Node& n, const std::string& origin) {
  const auto m = n.Mark();
  if (m.line < 0) return origin;
  return origin + ":" + std::to_string(m.line + 1);
}

[[noreturn]] void fail(const YAML::Node& n, const std::string& origin, const std::string& msg) {
  throw ConfigError(where(n, origin) + ": " + msg);
}

void check_keys(const YAML::Node& n, const std::string& origin, std::initializer_list<const char*> allowed) {
  if (!n.IsMap()) fail(n, origin, "expected a mapping");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!ok.count(key)) fail(kv.first, origin, "unknown key '" + key + "'");
  }
}

template <class T>
T scalar(const YAML::Node& n, const std::string& origin, const std::string& name) {
  if (!n.IsScalar()) fail(n, origin, "'" + name + "' must be a scalar");
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    fail(n, origin, "'" + name + "' has the wrong type");
  }
}

template <class T>
void read(const YAML::Node& parent, const char* key, T& out, const std::string& origin) {
  if (const auto n = parent[key]) out = scalar<T>(n, origin, key);
}

// Real value given either directly or in units of pi.
double angle_like(const YAML::Node& n, const char* key, const std::string& origin, double fallback) {
  const std::string pi_key = std::string(key) + "_over_pi";
  const bool plain = static_cast<bool>(n[key]), scaled = static_cast<bool>(n[pi_key]);
  if (plain && scaled) fail(n, origin, "give either '" + std::string(key) + "' or '" + pi_key + "', not both");
  if (plain) return scalar<double>(n[key], origin, key);
  if (scaled) return kPi * scalar<double>(n[pi_key], origin, pi_key);
  return fallback;
}

BondOrder bond_order_from(const YAML::Node& n, const std::string& origin) {
  const auto s = scalar<std::string>(n, origin, "bond_order");
  if (s == "even_odd") return BondOrder::EvenOdd;
  if (s == "sequential") return BondOrder::Sequential;
  fail(n, origin, "bond_order must be 'even_odd' or 'sequential'");
}

TermOrder term_order_from(const YAML::Node& n, const std::string& origin) {
  const auto s = scalar<std::string>(n, origin, "term_order");
  if (s == "lexicographic") return TermOrder::Lexicographic;
  if (s == "canonical") return TermOrder::Canonical;
  fail(n, origin, "term_order must be 'lexicographic' or 'canonical'");
}

void read_alphas(const YAML::Node& n, RunConfig& c, const std::string& origin) {
  if (!n.IsMap()) fail(n, origin, "'alphas' must map momentum labels to lists of [alpha0, alpha1]");
  const auto labels = momentum_labels(c.lattice.n_phys);
  for (const auto& kv : n) {
    const int label = scalar<int>(kv.first, origin, "momentum label");
    if (std::find(labels.begin(), labels.end(), label) == labels.end())
      fail(kv.first, origin, "momentum label " + std::to_string(label) + " lies outside the zone");
    if (!kv.second.IsSequence()) fail(kv.second, origin, "expected a list of [alpha0, alpha1] pairs");
    int d = 1;
    for (const auto& pair : kv.second) {
      if (!pair.IsSequence() || pair.size() != 2) fail(pair, origin, "each entry must be [alpha0, alpha1]");
      c.alphas.set(label, d, 0, scalar<double>(pair[0], origin, "alpha0"));
      c.alphas.set(label, d, 1, scalar<double>(pair[1], origin, "alpha1"));
      ++d;
    }
  }
}

}  // namespace

void RunConfig::validate() const {
  lattice.validate();
  scheme.validate();
  evolution.validate();
  if (noise.p1 < 0 || noise.p1 > 1 || noise.p2 < 0 || noise.p2 > 1)
    throw ConfigError("noise probabilities must lie in [0, 1]");
  if (noise.trajectories < 1) throw ConfigError("noise trajectories must be >= 1");
  if (noise.twirl_circuits < 1) throw ConfigError("twirl_circuits must be >= 1");
  if (order < 1) throw ConfigError("ansatz order must be >= 1");
  if (order > lattice.n_phys) throw ConfigError("ansatz order exceeds the longest meson length N_P");
  if (shots < 1) throw ConfigError("shots must be >= 1");
  if (bootstrap_resamples < 2) throw ConfigError("bootstrap resamples must be >= 2");
  if (vqe_wp_trotter_steps < 1) throw ConfigError("vqe_wp_trotter_steps must be >= 1");
  if (scheme.ancillas != 1 && scheme.ancillas != 2) throw ConfigError("scheme ancillas must be 1 or 2");
  for (const auto& pk : packets) {
    if (!(pk.sigma > 0)) throw ConfigError("wave packet sigma must be > 0");
    if (momentum_index(pk.kbar, lattice.n_phys, 1e-6) < 0)
      throw ConfigError("wave packet kbar = " + std::to_string(pk.kbar) + " is not a zone momentum");
  }
  for (double t : return_times)
    if (t < 0) throw ConfigError("return_times must be >= 0");
  if (!optimize_ansatz && !packets.empty()) {
    for (const auto& w : profiles())
      for (std::size_t i = 0; i < w.values.size(); ++i) {
        if (std::abs(w.values[i]) <= 1e-12) continue;
        const int label = momentum_labels(lattice.n_phys)[i];
        if (!alphas.complete(label, order))
          throw ConfigError("ansatz parameters missing for momentum label " + std::to_string(label) +
                            " through order " + std::to_string(order));
      }
  }
}

std::vector<WavePacketProfile> RunConfig::profiles() const {
  std::vector<WavePacketProfile> out;
  for (const auto& pk : packets) {
    const int i = momentum_index(pk.kbar, lattice.n_phys, 1e-6);
    const double kb = i >= 0 ? brillouin_zone(lattice)[static_cast<std::size_t>(i)] : pk.kbar;
    out.push_back(gaussian_profile(pk.mu, pk.sigma, kb, lattice));
  }
  return out;
}

RunConfig default_config() {
  RunConfig c;
  c.packets = {{2, 7 * kPi / 20, 2 * kPi / 5}, {7, 7 * kPi / 20, -2 * kPi / 5}};
  c.scheme.ancillas = 1;
  c.scheme.wp_trotter_steps = 1;
  c.scheme.theta_cutoff = 0.1;
  c.evolution.dt = 1.0;
  c.evolution.n_steps = 4;
  return c;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  RunConfig c = default_config();
  c.source_text = text;
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  check_keys(root, origin,
             {"lattice", "ground", "ansatz", "optimizer", "wavepackets", "scheme", "evolution", "shots", "seed",
              "bootstrap", "noise", "outputs"});

  if (const auto n = root["lattice"]) {
    check_keys(n, origin, {"n_phys", "mass", "eps", "hopping"});
    read(n, "n_phys", c.lattice.n_phys, origin);
    read(n, "mass", c.lattice.mass, origin);
    read(n, "eps", c.lattice.eps, origin);
    read(n, "hopping", c.lattice.hopping, origin);
    if (c.lattice.n_phys < 1) fail(n, origin, "n_phys must be >= 1");
  }
  if (const auto n = root["ground"]) {
    check_keys(n, origin, {"theta_h", "theta_m", "bond_order", "optimize"});
    read(n, "theta_h", c.ground.theta_h, origin);
    read(n, "theta_m", c.ground.theta_m, origin);
    read(n, "optimize", c.optimize_ground, origin);
    if (n["bond_order"]) c.bond_order = bond_order_from(n["bond_order"], origin);
  }
  c.evolution.order = c.bond_order;
  if (const auto n = root["ansatz"]) {
    check_keys(n, origin, {"order", "optimize", "vqe_wp_trotter_steps", "alphas"});
    read(n, "order", c.order, origin);
    read(n, "optimize", c.optimize_ansatz, origin);
    read(n, "vqe_wp_trotter_steps", c.vqe_wp_trotter_steps, origin);
    if (c.order < 1) fail(n, origin, "order must be >= 1");
    c.alphas = AnsatzParams(c.order);
    if (const auto a = n["alphas"]) read_alphas(a, c, origin);
  }
  c.scheme.order = c.order;
  if (const auto n = root["optimizer"]) {
    check_keys(n, origin, {"restarts", "ftol", "max_iter", "initial_step", "seed"});
    read(n, "restarts", c.optimizer.restarts, origin);
    read(n, "ftol", c.optimizer.ftol, origin);
    read(n, "max_iter", c.optimizer.max_iter, origin);
    read(n, "initial_step", c.optimizer.initial_step, origin);
    read(n, "seed", c.optimizer.seed, origin);
  }
  if (const auto n = root["wavepackets"]) {
    if (!n.IsSequence()) fail(n, origin, "'wavepackets' must be a list");
    c.packets.clear();
    for (const auto& w : n) {
      check_keys(w, origin, {"mu", "sigma", "sigma_over_pi", "kbar", "kbar_over_pi"});
      PacketSpec pk;
      if (!w["mu"]) fail(w, origin, "wave packet needs 'mu'");
      pk.mu = scalar<double>(w["mu"], origin, "mu");
      pk.sigma = angle_like(w, "sigma", origin, -1.0);
      pk.kbar = angle_like(w, "kbar", origin, 0.0);
      if (!(pk.sigma > 0)) fail(w, origin, "wave packet needs a positive 'sigma' or 'sigma_over_pi'");
      if (momentum_index(pk.kbar, c.lattice.n_phys, 1e-6) < 0)
        fail(w, origin, "kbar = " + std::to_string(pk.kbar) + " is not a zone momentum");
      c.packets.push_back(pk);
    }
  }
  if (const auto n = root["scheme"]) {
    check_keys(n, origin, {"ancillas", "wp_trotter_steps", "theta_cutoff", "term_order"});
    read(n, "ancillas", c.scheme.ancillas, origin);
    read(n, "wp_trotter_steps", c.scheme.wp_trotter_steps, origin);
    read(n, "theta_cutoff", c.scheme.theta_cutoff, origin);
    if (n["term_order"]) c.scheme.term_order = term_order_from(n["term_order"], origin);
    if (c.scheme.ancillas != 1 && c.scheme.ancillas != 2) fail(n, origin, "ancillas must be 1 or 2");
  }
  if (const auto n = root["evolution"]) {
    check_keys(n, origin, {"dt", "n_steps", "return_times"});
    read(n, "dt", c.evolution.dt, origin);
    read(n, "n_steps", c.evolution.n_steps, origin);
    if (const auto rt = n["return_times"]) {
      if (!rt.IsSequence()) fail(rt, origin, "'return_times' must be a list");
      for (const auto& t : rt) c.return_times.push_back(scalar<double>(t, origin, "return time"));
    }
    if (!(c.evolution.dt > 0)) fail(n, origin, "dt must be > 0");
    if (c.evolution.n_steps < 0) fail(n, origin, "n_steps must be >= 0");
  }
  read(root, "shots", c.shots, origin);
  read(root, "seed", c.seed, origin);
  read(root, "bootstrap", c.bootstrap_resamples, origin);
  if (const auto n = root["noise"]) {
    check_keys(n, origin, {"p1", "p2", "trajectories", "twirl", "twirl_circuits"});
    read(n, "p1", c.noise.p1, origin);
    read(n, "p2", c.noise.p2, origin);
    read(n, "trajectories", c.noise.trajectories, origin);
    read(n, "twirl", c.noise.twirl, origin);
    read(n, "twirl_circuits", c.noise.twirl_circuits, origin);
  }
  if (const auto n = root["outputs"]) {
    check_keys(n, origin, {"dir"});
    read(n, "dir", c.out_dir, origin);
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string alphas_yaml(const AnsatzParams& ap, int indent) {
  std::ostringstream os;
  os.precision(17);
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  for (const auto& [label, rows] : ap.table()) {
    os << pad << label << ": [";
    for (std::size_t d = 0; d < rows.size(); ++d) os << (d ? ", " : "") << "[" << rows[d][0] << ", " << rows[d][1] << "]";
    os << "]\n";
  }
  return os.str();
}

}  // namespace z2h::app
