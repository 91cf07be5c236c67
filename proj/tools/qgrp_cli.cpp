// qgrp: run simulations, compare protocols, solve the collision table.

#include "qgrp/config.hpp"
#include "qgrp/dcf_model.hpp"
#include "qgrp/experiment.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kOk = 0;
constexpr int kRunFailure = 1;
constexpr int kConfigError = 2;

struct ConfigLoadError {
  std::string what;
};

qgrp::ScenarioConfig load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigLoadError{fmt::format("cannot read config '{}'", path)};
  }
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return qgrp::parse_config(text.str());
  } catch (const qgrp::ConfigParseError& e) {
    throw ConfigLoadError{fmt::format("{}:{}", path, e.what())};
  } catch (const qgrp::ConfigValidationError& e) {
    throw ConfigLoadError{fmt::format("{}: {}", path, e.what())};
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QoS geographic routing simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool logs = false;
  int jobs = 1;

  auto* run = app.add_subcommand("run", "simulate the configured protocol over its repetitions");
  run->add_option("-c,--config", config_path, "scenario config")->required();
  run->add_option("-o,--output", out_dir, "output directory")->required();
  run->add_flag("--logs", logs, "write per-run event logs");
  run->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);

  auto* cmp = app.add_subcommand("compare", "run both protocols over experiment.sizes");
  cmp->add_option("-c,--config", config_path, "scenario config")->required();
  cmp->add_option("-o,--output", out_dir, "output directory")->default_val("compare_out");
  cmp->add_flag("--logs", logs, "write per-run event logs");
  cmp->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);

  std::string table_path;
  std::vector<double> densities = qgrp::dcf::default_density_axis();
  std::vector<double> distances = qgrp::dcf::default_distance_axis();
  std::string model = "reduced";
  qgrp::dcf::DcfParams params;
  auto* solve = app.add_subcommand("solve-dcf", "write the collision probability table");
  solve->add_option("-o,--output", table_path, "CSV path")->required();
  solve->add_option("--density-axis", densities, "nodes per 10^6 m^2")->delimiter(',');
  solve->add_option("--distance-axis", distances, "sender/receiver distances, m")->delimiter(',');
  solve->add_option("--model", model, "reduced | full")
      ->check(CLI::IsMember({"reduced", "full"}));
  solve->add_option("--cw-min", params.cw_min);
  solve->add_option("--cw-max", params.cw_max);
  solve->add_option("--carrier-sense-radius", params.carrier_sense_radius);
  solve->add_option("--interference-radius", params.interference_radius);
  solve->add_option("--payload-duration", params.payload_duration);
  solve->add_option("--virtual-slot", params.virtual_slot);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*solve) {
      params.validate();
      const auto m =
          model == "full" ? qgrp::dcf::CollisionModel::Full : qgrp::dcf::CollisionModel::Reduced;
      return qgrp::exp::solve_dcf_command(params, m, densities, distances, table_path);
    }
    const auto config = load(config_path);
    qgrp::exp::OutputOptions opts{out_dir, logs, jobs};
    const int rc =
        *run ? qgrp::exp::run_experiment(config, opts) : qgrp::exp::compare(config, opts);
    if (rc != 0) {
      fmt::print(std::cerr, "some runs failed; see {}/failures.txt\n", out_dir);
      return kRunFailure;
    }
    return kOk;
  } catch (const ConfigLoadError& e) {
    fmt::print(std::cerr, "config error: {}\n", e.what);
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    fmt::print(std::cerr, "config error: {}\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return kRunFailure;
  }
}
