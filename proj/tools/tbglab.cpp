#include <CLI11.hpp>

#include "tbglab/cli_runner.hpp"

int main(int argc, char** argv) {
  using namespace tbglab::cli;
  CLI::App app{"Numerical laboratory for the chiral twisted bilayer graphene model and its microlocal weights"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tool_version));

  struct Sub {
    CLI::App* app;
    std::string config, out;
    std::map<std::string, std::string> values;
  };
  const std::map<std::string, std::string> about = {
      {"symmetry-check", "lattice and potential identities at random points"},
      {"bracket-scan", "first and triple Poisson brackets along z = it"},
      {"corner-brackets", "iterated brackets at the stacking points"},
      {"magic-angles", "real magic couplings with spacings"},
      {"protected-state", "protected state on the torus: CSV, log-magnitude and binary grids"},
      {"decay-fit", "decay of the protected state near the hexagon and its slope in alpha"},
      {"eikonal-check", "perturbed eikonal phase, Hessians and weight samples"},
      {"corner-eikonal", "corner phase pipeline coefficients"},
      {"minorant", "discrete largest subharmonic minorant"},
      {"calculus-props", "analytic symbol calculus property checks"},
  };
  std::map<std::string, Sub> subs;
  for (const auto& name : subcommands()) subs[name];
  for (auto& [name, s] : subs) {
    s.app = app.add_subcommand(name, about.at(name));
    s.app->add_option("--config", s.config, "key = value file; command-line flags override it");
    s.app->add_option("--out", s.out, "output directory (default $TBGLAB_OUT/<subcommand>)");
    std::vector<std::string> keys = common_keys;
    for (const auto& k : schemas().at(name)) keys.push_back(k.name);
    for (const auto& k : keys) {
      std::string def;
      for (const auto& spec : schemas().at(name))
        if (spec.name == k) def = spec.def;
      s.app->add_option("--" + k, s.values[k], k == "threads" ? "worker threads" : "default " + def);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (auto& ch : msg)
      if (ch == '"' || ch == '\n') ch = '\'';
    std::cerr << "error kind=config message=\"" << msg << "\"\n";
    return ConfigError;
  }

  for (auto& [name, s] : subs) {
    if (!s.app->parsed()) continue;
    Invocation inv;
    inv.subcommand = name;
    if (!s.config.empty()) inv.config_file = s.config;
    if (!s.out.empty()) inv.out = s.out;
    for (const auto& [k, v] : s.values)
      if (s.app->count("--" + k)) inv.overrides.emplace_back(k, v);
    return run(inv);
  }
  return ConfigError;
}
