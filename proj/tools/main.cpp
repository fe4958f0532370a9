#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "plap/config.hpp"
#include "plap/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"plap: constrained variational solver for the p-Laplacian on flat tori"};
  std::string mode_name, config_path, out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;

  app.add_option("mode", mode_name, "solve | continue | verify | oracle")->required();
  app.add_option("--config", config_path, "path to the run configuration (JSON)")->required();
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_option("--seed", seed, "seed override")->each([&](const std::string&) {
    seed_given = true;
  });

  CLI11_PARSE(app, argc, argv);

  try {
    const plap::RunMode mode = plap::parse_mode(mode_name);
    plap::RunConfig config = plap::load_config(config_path);
    if (seed_given) config.seed = seed;
    if (!out_dir.empty()) config.output_dir = out_dir;
    const int status = plap::run(config, mode, config.output_dir);
    if (status == 0)
      std::cout << "converged; artifacts in " << config.output_dir << "\n";
    else
      std::cout << "did not converge (exit 2); artifacts in " << config.output_dir << "\n";
    return status;
  } catch (const plap::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const plap::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const plap::PreconditionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 2;
  }
}
