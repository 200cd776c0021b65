// Command-line front end: ingest chain/experiment configs, run the solvers
// and experiments, export statistics and plot-ready data files.
//
// Exit codes: 0 success, 2 validation error, 3 solver failure,
// 4 oracle/invariant failure.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tpt/chain.hpp"
#include "tpt/committor.hpp"
#include "tpt/convergence.hpp"
#include "tpt/io.hpp"
#include "tpt/oracle.hpp"
#include "tpt/stats.hpp"
#include "tpt/ulam.hpp"
#include "tpt/version.hpp"

namespace {

using tpt::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitInvariant = 4;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
  std::optional<double> tolerance;
  std::optional<double> ab_radius;
  int threads = 0;
  // per-command extras
  std::string windows_csv;
  std::optional<long long> sim_length;
  std::optional<int> sim_ensemble;
  std::string store_currents = "auto";
};

void add_common_flags(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment configuration (JSON)")->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "seed override (u64)");
  cmd->add_option("--format", args.format, "output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--tolerance", args.tolerance, "committor residual tolerance override");
  cmd->add_option("--ab-radius", args.ab_radius, "radius override for disk-shaped A/B sets");
  cmd->add_option("--threads", args.threads, "sampling threads (0 = hardware)");
}

void emit_error(const CommonArgs& args, const std::string& type, const std::string& message) {
  json err{{"error", {{"type", type}, {"message", message}}}};
  std::cerr << err.dump() << "\n";
  std::error_code ec;
  std::filesystem::create_directories(args.out_dir, ec);
  if (!ec) {
    std::ofstream out(args.out_dir + "/error.json");
    if (out) out << err.dump(1) << "\n";
  }
}

struct LoadedRun {
  tpt::ExperimentConfig config;
  std::uint64_t seed = 0;
  tpt::RealizedExperiment experiment;
};

/// Shared front half of every command: parse the config, apply CLI
/// overrides, build/load the chain, and run the specification checks.
LoadedRun prepare(const CommonArgs& args, bool validate_spec = true) {
  tpt::ExperimentConfig cfg = tpt::load_experiment_config(args.config_path);
  if (args.tolerance) cfg.tolerances.committor_residual = *args.tolerance;
  if (args.ab_radius) {
    auto override_radius = [&](std::optional<tpt::SetSpec>& s) {
      if (s)
        if (auto* disk = std::get_if<tpt::DiskSpec>(&*s)) disk->radius = *args.ab_radius;
    };
    override_radius(cfg.set_a);
    override_radius(cfg.set_b);
    if (!cfg.set_a && cfg.ulam &&
        cfg.ulam->dynamics.potential.kind == tpt::Potential::Kind::triple_well) {
      cfg.set_a = tpt::DiskSpec{-1.0, 0.0, *args.ab_radius};
      cfg.set_b = tpt::DiskSpec{1.0, 0.0, *args.ab_radius};
    }
  }
  LoadedRun run{cfg, args.seed.value_or(cfg.seed),
                tpt::realize_experiment(cfg, args.seed.value_or(cfg.seed), args.threads)};
  if (validate_spec) {
    const auto diags = tpt::validate_chain(run.experiment.spec, cfg.tolerances);
    if (!tpt::all_valid(diags)) {
      json msg = tpt::diagnostics_to_json(diags);
      throw tpt::PreconditionError("chain validation failed: " + msg.dump());
    }
  }
  return run;
}

json make_metadata(const std::string& command, const CommonArgs& args, const LoadedRun& run) {
  json meta;
  meta["tool"] = "tpt";
  meta["version"] = tpt::kVersion;
  meta["command"] = command;
  meta["generator"] = tpt::kGeneratorId;
  meta["seed"] = run.seed;
  std::ostringstream hash;
  hash << std::hex << run.config.config_hash;
  meta["config"] = args.config_path;
  meta["config_hash"] = hash.str();
  meta["tolerances"] = tpt::tolerances_to_json(run.config.tolerances);
  meta["provenance"] = run.experiment.provenance;
  return meta;
}

void write_metadata(const CommonArgs& args, json meta, double wall_seconds) {
  meta["wall_time_s"] = wall_seconds;
  tpt::write_file(args.out_dir + "/metadata.json", meta.dump(1) + "\n");
}

std::vector<int> parse_windows(const std::string& csv) {
  std::vector<int> out;
  std::istringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  return out;
}

int cmd_committor(const CommonArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  LoadedRun run = prepare(args);
  const tpt::CommittorField field =
      tpt::solve_committors(run.experiment.spec, run.experiment.sets,
                            tpt::PeriodicMethod::augmented, run.config.tolerances);
  std::filesystem::create_directories(args.out_dir);
  if (args.format == "json")
    tpt::write_file(args.out_dir + "/committors.json", tpt::committors_to_json(field).dump(1) + "\n");
  else
    tpt::write_committors_csv(args.out_dir + "/committors.csv", field);
  json meta = make_metadata("committor", args, run);
  meta["residual_forward"] = field.residual_forward;
  meta["residual_backward"] = field.residual_backward;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_metadata(args, std::move(meta), secs);
  return kExitOk;
}

int cmd_stats(const CommonArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  LoadedRun run = prepare(args);
  const auto& spec = run.experiment.spec;
  const auto& sets = run.experiment.sets;
  const tpt::Tolerances& tol = run.config.tolerances;

  const tpt::CommittorField field =
      tpt::solve_committors(spec, sets, tpt::PeriodicMethod::augmented, tol);
  const tpt::DensityFamily densities = tpt::densities_for(spec, tol);
  tpt::StatsOptions options;
  if (args.store_currents == "always") options.store_currents = 1;
  if (args.store_currents == "never") options.store_currents = 0;
  const tpt::ReactiveStats stats = tpt::compute_stats(field, densities, spec, sets, options);

  std::filesystem::create_directories(args.out_dir);
  if (args.format == "json")
    tpt::write_file(args.out_dir + "/stats.json", tpt::stats_to_json(stats).dump(1) + "\n");
  else
    tpt::write_stats_csv(args.out_dir, stats);
  json aggregates{{"k_ab", stats.k_ab},
                  {"k_ab_from_inflow", stats.k_ab_from_inflow},
                  {"z_ab", stats.z_aggregate ? json(*stats.z_aggregate) : json(nullptr)},
                  {"t_ab", stats.t_aggregate ? json(*stats.t_aggregate) : json(nullptr)}};
  tpt::write_file(args.out_dir + "/aggregates.json", aggregates.dump(1) + "\n");
  tpt::write_file(args.out_dir + "/conservation.json",
                  tpt::conservation_to_json(stats.conservation, tol.conservation).dump(1) + "\n");

  if (run.experiment.grid) {
    std::vector<std::pair<int, tpt::Matrix>> glyph_slices;
    if (stats.currents_stored) {
      for (std::size_t n = 0; n < stats.effective.size(); ++n)
        glyph_slices.emplace_back(static_cast<int>(n), stats.effective[n]);
    } else {
      // long window: emit the central slice only
      const int mid = tpt::current_slice_count(spec) / 2;
      glyph_slices.emplace_back(
          mid, tpt::effective_current(tpt::reactive_current_slice(field, densities, spec, mid)));
    }
    tpt::write_current_vectors_csv(args.out_dir + "/current_vectors.csv", *run.experiment.grid,
                                   glyph_slices);
  }

  json meta = make_metadata("stats", args, run);
  meta["residual_forward"] = field.residual_forward;
  meta["residual_backward"] = field.residual_backward;
  meta["currents_stored"] = stats.currents_stored;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_metadata(args, std::move(meta), secs);

  if (!stats.conservation.pass(tol.conservation)) {
    emit_error(args, "conservation_violation", "current conservation residual above tolerance");
    return kExitInvariant;
  }
  return kExitOk;
}

int cmd_ulam_build(const CommonArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  LoadedRun run = prepare(args);
  if (!run.config.ulam)
    throw tpt::PreconditionError("ulam-build needs an `ulam` block in the config");
  std::filesystem::create_directories(args.out_dir);
  tpt::ChainDocument doc{run.experiment.spec, run.experiment.sets, run.experiment.grid};
  tpt::write_chain_file(args.out_dir + "/chain.json", doc);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_metadata(args, make_metadata("ulam-build", args, run), secs);
  return kExitOk;
}

int cmd_simulate(const CommonArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  LoadedRun run = prepare(args);
  const auto& spec = run.experiment.spec;
  const long long length = args.sim_length.value_or(run.config.sim_length);
  const int ensemble = args.sim_ensemble.value_or(run.config.sim_ensemble);

  std::vector<tpt::TrajectorySample> trajectories;
  if (const auto* f = std::get_if<tpt::FiniteSpec>(&spec)) {
    trajectories = tpt::simulate_ensemble(*f, std::max(1, ensemble), run.seed);
  } else {
    trajectories.push_back(tpt::simulate(spec, length, run.seed, run.config.tolerances));
  }
  std::filesystem::create_directories(args.out_dir);
  tpt::write_trajectories_csv(args.out_dir + "/trajectory.csv", trajectories,
                              tpt::n_states_of(spec), run.seed);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_metadata(args, make_metadata("simulate", args, run), secs);
  return kExitOk;
}

int cmd_converge(const CommonArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  LoadedRun run = prepare(args);
  const auto* s = std::get_if<tpt::StationarySpec>(&run.experiment.spec);
  if (!s) throw tpt::PreconditionError("converge requires a stationary chain source");
  std::vector<int> windows = run.config.windows;
  if (!args.windows_csv.empty()) windows = parse_windows(args.windows_csv);
  if (windows.empty()) throw tpt::PreconditionError("converge: no window list given");
  for (std::size_t i = 1; i < windows.size(); ++i)
    if (windows[i] <= windows[i - 1])
      throw tpt::PreconditionError("converge: window list must increase");

  const auto points = tpt::committor_convergence(s->matrix, run.experiment.sets, windows,
                                                 run.config.tolerances);
  std::filesystem::create_directories(args.out_dir);
  std::ostringstream csv;
  csv << "window,err_forward,err_backward\n";
  std::vector<std::pair<double, double>> xy_f, xy_b;
  for (const auto& p : points) {
    csv << p.window << ',' << tpt::format_double(p.err_forward) << ','
        << tpt::format_double(p.err_backward) << '\n';
    xy_f.emplace_back(p.window, p.err_forward);
    xy_b.emplace_back(p.window, p.err_backward);
  }
  tpt::write_file(args.out_dir + "/convergence.csv", csv.str());

  const auto fit_f = tpt::fit_log_linear(xy_f);
  const auto fit_b = tpt::fit_log_linear(xy_b);
  json meta = make_metadata("converge", args, run);
  meta["fit_forward"] = {{"slope", fit_f.slope}, {"r_squared", fit_f.r_squared},
                         {"points_used", fit_f.points_used}};
  meta["fit_backward"] = {{"slope", fit_b.slope}, {"r_squared", fit_b.r_squared},
                          {"points_used", fit_b.points_used}};
  meta["converged"] =
      points.back().err_forward < 1e-12 && points.back().err_backward < 1e-12;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_metadata(args, std::move(meta), secs);
  return kExitOk;
}

int cmd_validate(const CommonArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  LoadedRun run = prepare(args, /*validate_spec=*/false);
  const auto& spec = run.experiment.spec;
  const auto& sets = run.experiment.sets;
  const tpt::Tolerances& tol = run.config.tolerances;

  const int n_states = tpt::n_states_of(spec);
  const int slices = tpt::slice_count(spec);
  if (n_states > 16)
    throw tpt::PreconditionError("validate is limited to chains with <= 16 states");
  if (tpt::regime_of(spec) == tpt::Regime::finite && slices > 16)
    throw tpt::PreconditionError("validate is limited to finite windows with N <= 16");

  json report;
  bool failed = false;

  const auto diags = tpt::validate_chain(spec, tol);
  report["diagnostics"] = tpt::diagnostics_to_json(diags);
  if (!tpt::all_valid(diags)) {
    emit_error(args, "validation", "chain specification violates invariants");
    return kExitValidation;
  }

  const tpt::CommittorField field =
      tpt::solve_committors(spec, sets, tpt::PeriodicMethod::augmented, tol);
  const tpt::DensityFamily densities = tpt::densities_for(spec, tol);
  const auto roles = tpt::partition_roles(sets, n_states);

  if (tpt::regime_of(spec) == tpt::Regime::periodic) {
    const auto& matrices = std::get<tpt::PeriodicSpec>(spec).matrices;
    const tpt::CommittorField stacked =
        tpt::solve_periodic(matrices, sets, tpt::PeriodicMethod::stacked, tol);
    double dev = 0.0;
    for (std::size_t m = 0; m < field.forward.size(); ++m) {
      dev = std::max(dev, tpt::max_abs_diff(field.forward[m], stacked.forward[m]));
      dev = std::max(dev, tpt::max_abs_diff(field.backward[m], stacked.backward[m]));
    }
    report["method_agreement"] = dev;
    failed |= dev > tol.method_agreement;
  }

  // Path-enumeration sandwich (exact in the finite regime).
  double worst_gap = 0.0;
  bool sandwich_ok = true;
  const bool finite = tpt::regime_of(spec) == tpt::Regime::finite;
  for (int n = 0; n < (finite ? slices : slices); ++n) {
    for (int i = 0; i < n_states; ++i) {
      if (roles[i] != tpt::Role::C) continue;
      for (const auto direction : {tpt::Direction::forward, tpt::Direction::backward}) {
        if (finite) {
          const auto res = tpt::enumerate_committor(spec, sets, i, n, slices, direction, tol);
          const double q = direction == tpt::Direction::forward ? field.forward[n][i]
                                                                : field.backward[n][i];
          worst_gap = std::max(worst_gap, std::abs(res.lower_bound - q));
          sandwich_ok &= std::abs(res.lower_bound - q) <= 1e-10;
        } else {
          int max_len = 64;
          tpt::EnumerationResult res;
          for (; max_len <= 65536; max_len *= 2) {
            res = tpt::enumerate_committor(spec, sets, i, n, max_len, direction, tol);
            if (res.truncation_bound < 1e-12) break;
          }
          const double q = direction == tpt::Direction::forward ? field.forward_at(n)[i]
                                                                : field.backward_at(n)[i];
          const bool ok =
              res.lower_bound <= q + 1e-10 && q <= res.lower_bound + res.truncation_bound + 1e-10;
          sandwich_ok &= ok;
          worst_gap = std::max(worst_gap, std::abs(q - res.lower_bound) - res.truncation_bound);
        }
      }
    }
  }
  report["oracle_max_gap"] = worst_gap;
  report["oracle_sandwich_ok"] = sandwich_ok;
  failed |= !sandwich_ok;

  const tpt::ReactiveStats stats = tpt::compute_stats(field, densities, spec, sets);
  report["conservation"] = tpt::conservation_to_json(stats.conservation, tol.conservation);
  failed |= !stats.conservation.pass(tol.conservation);

  // Seeded estimator cross-checks (z-scores against the exact pipeline).
  if (tpt::regime_of(spec) == tpt::Regime::stationary) {
    const auto traj = tpt::simulate(spec, std::max(run.config.sim_length, 10000ll), run.seed, tol);
    const auto est = tpt::ergodic_estimates(traj, sets, n_states);
    const double z = est.rate_se > 0.0 ? std::abs(est.rate - stats.k_ab) / est.rate_se : 0.0;
    report["ergodic_rate"] = est.rate;
    report["ergodic_rate_se"] = est.rate_se;
    report["ergodic_rate_z"] = z;
    failed |= z > 4.0;
  } else if (finite) {
    const auto& f = std::get<tpt::FiniteSpec>(spec);
    const int count = std::max(1000, run.config.sim_ensemble);
    const auto est = tpt::ensemble_rate_estimate(f, sets, count, run.seed);
    const double z = est.se > 0.0 ? std::abs(est.rate - stats.k_ab) / est.se : 0.0;
    report["ensemble_rate"] = est.rate;
    report["ensemble_rate_se"] = est.se;
    report["ensemble_rate_z"] = z;
    failed |= z > 4.0;
  }

  report["pass"] = !failed;
  std::filesystem::create_directories(args.out_dir);
  tpt::write_file(args.out_dir + "/validation.json", report.dump(1) + "\n");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_metadata(args, make_metadata("validate", args, run), secs);
  std::cout << (failed ? "FAIL" : "OK") << " validation report written to " << args.out_dir
            << "/validation.json\n";
  return failed ? kExitInvariant : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transition statistics of Markov chains in stationary, periodic and finite-time regimes"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* committor = app.add_subcommand("committor", "solve committor fields");
  add_common_flags(committor, args);
  auto* stats = app.add_subcommand("stats", "committors plus reactive statistics");
  add_common_flags(stats, args);
  stats->add_option("--store-currents", args.store_currents,
                    "store per-slice current matrices: auto, always, never")
      ->check(CLI::IsMember({"auto", "always", "never"}));
  auto* ulam = app.add_subcommand("ulam-build", "estimate a chain from Langevin dynamics");
  add_common_flags(ulam, args);
  auto* simulate = app.add_subcommand("simulate", "sample seeded trajectories");
  add_common_flags(simulate, args);
  simulate->add_option("--length", args.sim_length, "trajectory length (infinite-time regimes)");
  simulate->add_option("--ensemble", args.sim_ensemble, "realization count (finite regime)");
  auto* converge = app.add_subcommand("converge", "finite-window to stationary convergence study");
  add_common_flags(converge, args);
  converge->add_option("--windows", args.windows_csv, "comma-separated window sizes");
  auto* validate = app.add_subcommand("validate", "cross-check solvers against the path oracle");
  add_common_flags(validate, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (committor->parsed()) return cmd_committor(args);
    if (stats->parsed()) return cmd_stats(args);
    if (ulam->parsed()) return cmd_ulam_build(args);
    if (simulate->parsed()) return cmd_simulate(args);
    if (converge->parsed()) return cmd_converge(args);
    if (validate->parsed()) return cmd_validate(args);
  } catch (const tpt::PreconditionError& e) {
    emit_error(args, "precondition", e.what());
    return kExitValidation;
  } catch (const tpt::SolverError& e) {
    emit_error(args, "solver", e.what());
    return kExitSolver;
  } catch (const std::exception& e) {
    emit_error(args, "internal", e.what());
    return 1;
  }
  return kExitOk;
}
