#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "config.hpp"
#include "experiments.hpp"
#include "json.hpp"

namespace {

using namespace z2h;
using namespace z2h::app;

struct Common {
  std::string config;
  std::string manifest;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> shots;
  std::optional<std::string> out;
};

RunConfig resolve(const Common& o) {
  if (o.config.empty() == o.manifest.empty()) throw ConfigError("give exactly one of --config or --manifest");
  RunConfig c;
  if (!o.manifest.empty()) {
    std::ifstream in(o.manifest);
    if (!in) throw ConfigError("cannot open manifest '" + o.manifest + "'");
    nlohmann::json m;
    try {
      in >> m;
      c = parse_config(m.at("config").get<std::string>(), o.manifest + "#config");
      c.seed = m.at("seed").get<std::uint64_t>();
      c.shots = m.at("shots").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(o.manifest + ": malformed manifest: " + e.what());
    }
  } else {
    c = load_config(o.config);
  }
  if (o.seed) c.seed = *o.seed;
  if (o.shots) c.shots = *o.shots;
  if (o.out) c.out_dir = *o.out;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Z2 gauge theory hadron wave-packet simulator"};
  app.require_subcommand(1);
  Common opts;

  const std::map<std::string, std::pair<std::string, std::function<Files(const RunConfig&)>>> commands = {
      {"vqe", {"optimize Q_GS angles and ansatz parameters", cmd_vqe}},
      {"prepare", {"prepare the wave-packet state and report diagnostics", cmd_prepare}},
      {"evolve", {"Trotter evolution with per-step observables", cmd_evolve}},
      {"return-prob", {"return probability from Hadamard tests", cmd_return_prob}},
      {"oracle", {"exact-diagonalization reference data", cmd_oracle}},
      {"twirl-odr", {"noisy evolution with twirling and decoherence renormalization", cmd_twirl_odr}},
  };
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", opts.config, "YAML run configuration");
    sub->add_option("--manifest", opts.manifest, "rerun from a manifest.json written by an earlier run");
    sub->add_option("--seed", opts.seed, "override the master seed");
    sub->add_option("--shots", opts.shots, "override the shot count");
    sub->add_option("--out", opts.out, "output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    const RunConfig cfg = resolve(opts);
    const Files files = commands.at(name).second(cfg);
    write_outputs(cfg, name, files);
    std::cout << "wrote " << files.size() << " file(s) and manifest.json to " << cfg.out_dir << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ResourceError& e) {
    std::cerr << "resource guard: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
