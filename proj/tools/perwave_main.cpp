// Command-line front end: one subcommand per experiment plus validate,
// reproduce-paper and reference-config.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "perwave/experiments.hpp"

namespace {

perwave::Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  return perwave::Json::parse(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perwave: time-periodic potentials and defocusing waves"};
  app.set_version_flag("--version", perwave::kVersion);
  app.require_subcommand(1);

  std::string config_path, out_dir, reference_name;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    if (needs_config) opt->required();
    sub->add_option("--out", out_dir, "output directory (default: config, then $PERWAVE_OUT)");
    sub->add_option("--seed", seed, "override the configured seed");
    sub->add_option("--threads", threads, "worker threads for parallel sweeps")->check(CLI::Range(1u, 1024u));
  };

  for (const auto& name : perwave::experiment_names()) {
    add_common(app.add_subcommand(name, "run the " + name + " experiment"), true);
  }
  auto* validate_cmd = app.add_subcommand("validate", "check a configuration without running it");
  add_common(validate_cmd, true);
  auto* reproduce_cmd = app.add_subcommand("reproduce-paper", "run the reference experiment chain");
  add_common(reproduce_cmd, false);
  auto* reference_cmd = app.add_subcommand("reference-config", "print a reference configuration");
  reference_cmd->add_option("experiment", reference_name, "experiment name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : perwave::kExitConfigError;
  }

  perwave::RunOptions options;
  options.out_dir = out_dir;
  options.threads = threads;
  CLI::App* sub = app.get_subcommands().front();
  if (sub != reference_cmd && sub->count("--seed")) options.seed = seed;

  try {
    if (sub == reference_cmd) {
      std::cout << perwave::reference_config(reference_name).dump(2) << '\n';
      return 0;
    }
    if (sub == reproduce_cmd) {
      const auto result = perwave::reproduce_paper(options);
      std::cout << perwave::format_checks(result.manifest) << result.message << '\n';
      return result.exit_code;
    }
    perwave::Json config = load_config(config_path);
    if (sub == validate_cmd) {
      const auto diagnostics = perwave::validate(config);
      bool error = false;
      for (const auto& d : diagnostics) {
        const bool is_error = d.level == perwave::Diagnostic::Level::Error;
        error = error || is_error;
        std::cout << (is_error ? "error: " : "warning: ") << d.message << '\n';
      }
      if (diagnostics.empty()) std::cout << "ok\n";
      return error ? perwave::kExitConfigError : 0;
    }
    if (config.is_object() && config.value("experiment", sub->get_name()) != sub->get_name()) {
      std::cerr << "config experiment '" << config["experiment"].get<std::string>()
                << "' does not match subcommand '" << sub->get_name() << "'\n";
      return perwave::kExitConfigError;
    }
    config["experiment"] = sub->get_name();
    const auto result = perwave::run(config, options);
    std::cout << perwave::format_checks(result.manifest);
    (result.exit_code == 0 ? std::cout : std::cerr) << result.message << '\n';
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return perwave::kExitConfigError;
  }
}
