#include "qgrp/experiment.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

namespace qgrp::exp {

std::vector<RunSpec> grid(const std::vector<Protocol>& protocols, const std::vector<int>& sizes,
                          std::uint64_t base_seed, int repetitions) {
  std::vector<RunSpec> out;
  for (Protocol p : protocols) {
    for (int n : sizes) {
      for (int r = 0; r < repetitions; ++r) {
        out.push_back({p, n, base_seed + static_cast<std::uint64_t>(r)});
      }
    }
  }
  return out;
}

ScenarioConfig specialize(const ScenarioConfig& base, const RunSpec& spec) {
  ScenarioConfig c = base;
  c.protocol = spec.protocol;
  c.topology.nodes = spec.nodes;
  c.topology.seed = spec.seed;
  return c;
}

std::vector<RunOutcome> execute(const ScenarioConfig& base, const std::vector<RunSpec>& specs,
                                int jobs, bool keep_logs) {
  std::vector<RunOutcome> out(specs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      RunOutcome& o = out[i];
      o.spec = specs[i];
      try {
        const ScenarioConfig c = specialize(base, specs[i]);
        o.result = sim::run(c);
        o.metrics = metrics::compute_metrics(o.result.log, c.warm_up, c.sim_duration);
        if (!keep_logs) {
          o.result.log = {};
        }
      } catch (const std::exception& e) {
        o.error = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(specs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) {
    pool.emplace_back(worker);
  }
  worker();
  for (auto& t : pool) {
    t.join();
  }
  return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  }
  f << text;
}

}  // namespace

int write_outputs(const std::vector<RunOutcome>& outcomes, const std::vector<Protocol>& protocols,
                  const std::vector<int>& sizes, const OutputOptions& opts) {
  std::filesystem::create_directories(opts.dir);

  // rows sorted by (protocol, n, seed) whatever the execution order was
  std::vector<const RunOutcome*> sorted;
  for (const auto& o : outcomes) {
    sorted.push_back(&o);
  }
  std::sort(sorted.begin(), sorted.end(), [](const RunOutcome* a, const RunOutcome* b) {
    return std::tie(a->spec.protocol, a->spec.nodes, a->spec.seed) <
           std::tie(b->spec.protocol, b->spec.nodes, b->spec.seed);
  });

  std::map<std::pair<Protocol, int>, std::vector<metrics::RunMetrics>> groups;
  std::string runs = metrics::csv_header() + "\n";
  std::string failures;
  for (const RunOutcome* o : sorted) {
    const auto proto = to_string(o->spec.protocol);
    if (!o->error.empty()) {
      failures += fmt::format("{},{},{},{}\n", proto, o->spec.nodes, o->spec.seed, o->error);
      continue;
    }
    runs += metrics::csv_row(proto, o->spec.nodes, std::to_string(o->spec.seed),
                             metrics::metric_values(o->metrics)) +
            "\n";
    groups[{o->spec.protocol, o->spec.nodes}].push_back(o->metrics);
  }

  std::string summary = metrics::summary_header() + "\n";
  std::map<std::pair<Protocol, int>, metrics::Aggregate> aggs;
  for (const auto& [key, ms] : groups) {
    const auto agg = metrics::aggregate(ms);
    aggs[key] = agg;
    runs += metrics::csv_avg_row(to_string(key.first), key.second, agg) + "\n";
    summary += metrics::summary_row(to_string(key.first), key.second,
                                    static_cast<int>(ms.size()), agg) +
               "\n";
  }
  write_file(opts.dir / "runs.csv", runs);
  write_file(opts.dir / "summary.csv", summary);

  for (std::size_t k = 0; k < metrics::kMetricCount; ++k) {
    std::string plot = "nodes";
    for (Protocol p : protocols) {
      plot += fmt::format(",{}", to_string(p));
    }
    plot += "\n";
    for (int n : sizes) {
      plot += std::to_string(n);
      for (Protocol p : protocols) {
        auto it = aggs.find({p, n});
        if (it == aggs.end() || it->second[k].samples == 0) {
          plot += ",NA";
        } else {
          plot += fmt::format(",{}", it->second[k].mean);
        }
      }
      plot += "\n";
    }
    write_file(opts.dir / fmt::format("plot_{}.csv", metrics::metric_names()[k]), plot);
  }

  if (opts.write_logs) {
    std::filesystem::create_directories(opts.dir / "logs");
    for (const RunOutcome* o : sorted) {
      if (!o->error.empty()) {
        continue;
      }
      std::ofstream f(opts.dir / "logs" /
                          fmt::format("{}_n{}_s{}.log", to_string(o->spec.protocol),
                                      o->spec.nodes, o->spec.seed),
                      std::ios::binary);
      write_log(f, o->result.log);
    }
  }

  const auto manifest = opts.dir / "failures.txt";
  if (!failures.empty()) {
    write_file(manifest, failures);
    return 1;
  }
  std::filesystem::remove(manifest);
  return 0;
}

namespace {

int run_grid(const ScenarioConfig& config, const std::vector<Protocol>& protocols,
             const std::vector<int>& sizes, const OutputOptions& opts) {
  const auto specs = grid(protocols, sizes, config.topology.seed, config.experiment.repetitions);
  const auto outcomes = execute(config, specs, opts.jobs, opts.write_logs);
  return write_outputs(outcomes, protocols, sizes, opts);
}

}  // namespace

int run_experiment(const ScenarioConfig& config, const OutputOptions& opts) {
  validate(config);
  return run_grid(config, {config.protocol}, {config.topology.nodes}, opts);
}

int compare(const ScenarioConfig& config, const OutputOptions& opts) {
  validate(config);
  return run_grid(config, {Protocol::Qgrp, Protocol::Aodv}, config.experiment.sizes, opts);
}

int solve_dcf_command(const dcf::DcfParams& params, dcf::CollisionModel model,
                      const std::vector<double>& densities, const std::vector<double>& distances,
                      const std::filesystem::path& output) {
  dcf::SolverOptions opts;
  opts.model = model;
  dcf::CollisionTable table;
  try {
    table = dcf::build_table(densities, distances, params, opts);
  } catch (const dcf::DcfError& e) {
    fmt::print(std::cerr, "solve-dcf: {}\n", e.what());
    return 1;
  }
  std::ofstream f(output, std::ios::binary);
  if (!f) {
    fmt::print(std::cerr, "solve-dcf: cannot write {}\n", output.string());
    return 1;
  }
  table.write_csv(f);
  return 0;
}

}  // namespace qgrp::exp
