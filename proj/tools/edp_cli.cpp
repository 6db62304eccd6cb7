#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Time-periodic solutions of the damped compressible Euler system"};
  app.set_version_flag("--version", std::string(EDP_VERSION_STRING));
  app.require_subcommand(1);

  const std::map<std::string, std::string> about{
      {"spectrum", "eigenvalue branches over the grid's wavenumber range"},
      {"kernels", "real-space kernel fields and their radial decay slopes"},
      {"solve-periodic", "compute the time-periodic orbit"},
      {"evolve", "evolve a perturbed initial state over the horizon"},
      {"stability", "perturb the periodic orbit and track the difference"},
      {"norms", "forcing and state norms"},
  };
  std::string config_path;
  edp::CommandOptions options;
  for (const auto& name : edp::command_names()) {
    const auto it = about.find(name);
    auto* sub = app.add_subcommand(name, it == about.end() ? "" : it->second);
    sub->add_option("--config", config_path, "configuration file (defaults when omitted)")->check(CLI::ExistingFile);
    sub->add_option("--out", options.out_dir, "output directory (overrides [output] dir)");
    sub->add_flag("--quiet", options.quiet, "suppress progress output");
    if (name == "evolve" || name == "stability" || name == "norms")
      sub->add_option("--init", options.init_path, "initial state / perturbation snapshot (.edpf)")
          ->check(CLI::ExistingFile);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : edp::kExitValidation;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return edp::run_command_from_file(command, config_path, options, std::cerr);
}
