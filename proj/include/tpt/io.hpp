#ifndef TPT_IO_HPP
#define TPT_IO_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tpt/chain.hpp"
#include "tpt/committor.hpp"
#include "tpt/errors.hpp"
#include "tpt/oracle.hpp"
#include "tpt/rng.hpp"
#include "tpt/stats.hpp"
#include "tpt/ulam.hpp"

namespace tpt {

using json = nlohmann::json;

/// 17 significant digits: enough to reproduce any double exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PreconditionError("cannot write file: " + path);
  out << content;
}

/// Square matrix from a CSV file (comma- or whitespace-separated rows).
inline Matrix load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open matrix file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (char& c : line)
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    std::istringstream ss(line);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  const int n = static_cast<int>(rows.size());
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw PreconditionError("matrix file is not square: " + path);
    for (int j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

// ---------------------------------------------------------------------------
// Chain specification files

struct ChainDocument {
  ChainSpec spec;
  AbSets sets;
  std::optional<UlamGrid> grid;  // geometry carried along from a builder run
};

namespace detail {

inline json grid_to_json(const UlamGrid& grid) {
  return json{{"box", {grid.x_min(), grid.x_max(), grid.y_min(), grid.y_max()}},
              {"cell_size", {grid.cell_dx(), grid.cell_dy()}}};
}

inline UlamGrid grid_from_json(const json& j) {
  const auto& box = j.at("box");
  double dx, dy;
  if (j.at("cell_size").is_array()) {
    dx = j.at("cell_size")[0].get<double>();
    dy = j.at("cell_size")[1].get<double>();
  } else {
    dx = dy = j.at("cell_size").get<double>();
  }
  return UlamGrid(box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
                  box[3].get<double>(), dx, dy);
}

inline TransitionMatrix matrix_from_json_entry(const json& entry, int n_states,
                                               const std::string& base_dir) {
  if (entry.is_string()) {
    const std::filesystem::path p(entry.get<std::string>());
    const auto resolved = p.is_absolute() ? p : std::filesystem::path(base_dir) / p;
    Matrix m = load_matrix_csv(resolved.string());
    if (m.rows() != n_states)
      throw PreconditionError("matrix file size does not match n_states: " + resolved.string());
    return TransitionMatrix(std::move(m));
  }
  const auto flat = entry.get<std::vector<double>>();
  return TransitionMatrix(n_states, flat);
}

}  // namespace detail

inline ChainDocument chain_from_json(const json& j, const std::string& base_dir = ".") {
  try {
    const std::string regime = j.at("regime").get<std::string>();
    const int n_states = j.at("n_states").get<int>();
    const auto& mats_json = j.at("matrices");
    std::vector<TransitionMatrix> matrices;
    for (const auto& entry : mats_json)
      matrices.push_back(detail::matrix_from_json_entry(entry, n_states, base_dir));
    if (matrices.empty()) throw PreconditionError("chain file has no matrices");

    ChainSpec spec = StationarySpec{matrices.front()};
    if (regime == "stationary") {
      if (matrices.size() != 1)
        throw PreconditionError("stationary chain expects exactly one matrix");
    } else if (regime == "periodic") {
      if (j.contains("period") && j.at("period").get<int>() != static_cast<int>(matrices.size()))
        throw PreconditionError("`period` does not match the number of matrices");
      spec = PeriodicSpec{matrices};
    } else if (regime == "finite") {
      FiniteSpec f;
      f.matrices = matrices;
      if (j.contains("horizon") &&
          j.at("horizon").get<int>() != static_cast<int>(matrices.size()) + 1)
        throw PreconditionError("`horizon` must equal number of matrices + 1");
      f.initial_density = j.at("initial_density").get<std::vector<double>>();
      spec = std::move(f);
    } else {
      throw PreconditionError("unknown regime: " + regime);
    }

    AbSets sets(j.at("set_A").get<std::vector<int>>(), j.at("set_B").get<std::vector<int>>());
    std::optional<UlamGrid> grid;
    if (j.contains("grid")) grid = detail::grid_from_json(j.at("grid"));
    return ChainDocument{std::move(spec), std::move(sets), std::move(grid)};
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("malformed chain file: ") + e.what());
  }
}

inline ChainDocument load_chain_file(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("cannot parse ") + path + ": " + e.what());
  }
  return chain_from_json(j, std::filesystem::path(path).parent_path().string());
}

inline json chain_to_json(const ChainDocument& doc) {
  json j;
  j["regime"] = regime_name(regime_of(doc.spec));
  j["n_states"] = n_states_of(doc.spec);
  json mats = json::array();
  auto push_matrix = [&](const TransitionMatrix& m) { mats.push_back(m.dense().data()); };
  if (const auto* s = std::get_if<StationarySpec>(&doc.spec)) {
    push_matrix(s->matrix);
  } else if (const auto* p = std::get_if<PeriodicSpec>(&doc.spec)) {
    for (const auto& m : p->matrices) push_matrix(m);
    j["period"] = p->period();
  } else {
    const auto& f = std::get<FiniteSpec>(doc.spec);
    for (const auto& m : f.matrices) push_matrix(m);
    j["horizon"] = f.horizon();
    j["initial_density"] = f.initial_density;
  }
  j["matrices"] = std::move(mats);
  j["set_A"] = doc.sets.set_a;
  j["set_B"] = doc.sets.set_b;
  if (doc.grid) j["grid"] = detail::grid_to_json(*doc.grid);
  return j;
}

inline void write_chain_file(const std::string& path, const ChainDocument& doc) {
  write_file(path, chain_to_json(doc).dump(1));
}

// ---------------------------------------------------------------------------
// Experiment configuration (CLI front end)

struct DiskSpec {
  double cx = 0.0, cy = 0.0, radius = 0.4;
};
using SetSpec = std::variant<std::vector<int>, DiskSpec>;

struct UlamDescriptor {
  UlamGrid grid;
  LangevinSpec dynamics;
  int slices = 0;  // 0: single stationary estimate; >0: periodic family
};

struct ExperimentConfig {
  std::optional<std::string> chain_file;
  std::optional<UlamDescriptor> ulam;
  std::optional<SetSpec> set_a, set_b;
  bool rewindow_finite = false;  // re-interpret a stationary chain on a window
  int horizon = 0;
  std::optional<std::vector<double>> initial_density;  // default: stationary density
  std::vector<int> windows;
  std::uint64_t seed = 0;
  long long sim_length = 100000;
  int sim_ensemble = 0;
  Tolerances tolerances;
  std::string base_dir = ".";
  std::uint64_t config_hash = 0;
};

namespace detail {

inline SetSpec set_spec_from_json(const json& j) {
  if (j.is_array()) return j.get<std::vector<int>>();
  if (j.is_object() && j.contains("disk")) {
    const auto& d = j.at("disk");
    DiskSpec disk;
    disk.cx = d.at("center")[0].get<double>();
    disk.cy = d.at("center")[1].get<double>();
    disk.radius = d.value("radius", 0.4);
    return disk;
  }
  throw PreconditionError("set specification must be an index list or a disk");
}

inline Potential potential_from_json(const json& j) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name == "triple_well") return Potential::triple_well();
    if (name == "zero") return Potential::zero();
    throw PreconditionError("unknown potential: " + name);
  }
  if (j.is_object() && j.contains("linear")) {
    const auto& s = j.at("linear");
    return Potential::linear(s[0].get<double>(), s[1].get<double>());
  }
  throw PreconditionError("malformed potential descriptor");
}

inline void apply_tolerance_overrides(Tolerances& tol, const json& j) {
  tol.row_sum = j.value("row_sum", tol.row_sum);
  tol.density_sum = j.value("density_sum", tol.density_sum);
  tol.stationary_residual = j.value("stationary_residual", tol.stationary_residual);
  tol.power_target = j.value("power_target", tol.power_target);
  tol.committor_residual = j.value("committor_residual", tol.committor_residual);
  tol.committor_clip = j.value("committor_clip", tol.committor_clip);
  tol.conservation = j.value("conservation", tol.conservation);
  tol.method_agreement = j.value("method_agreement", tol.method_agreement);
}

}  // namespace detail

inline ExperimentConfig load_experiment_config(const std::string& path) {
  const std::string raw = read_file(path);
  json j;
  try {
    j = json::parse(raw);
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("cannot parse ") + path + ": " + e.what());
  }
  ExperimentConfig cfg;
  cfg.base_dir = std::filesystem::path(path).parent_path().string();
  if (cfg.base_dir.empty()) cfg.base_dir = ".";
  cfg.config_hash = fnv1a64(raw);
  try {
    if (j.contains("chain_file")) cfg.chain_file = j.at("chain_file").get<std::string>();
    if (j.contains("ulam")) {
      const auto& u = j.at("ulam");
      UlamGrid grid = detail::grid_from_json(u.at("grid"));
      LangevinSpec dyn;
      dyn.potential = detail::potential_from_json(u.value("potential", json("triple_well")));
      dyn.sigma = u.value("sigma", 1.0);
      dyn.tau = u.value("tau", 0.3);
      dyn.euler_dt = u.value("euler_dt", dyn.tau / 30.0);
      dyn.samples_per_cell = u.value("samples_per_cell", 10000);
      if (u.contains("forcing")) {
        const auto& f = u.at("forcing");
        const std::string type = f.value("type", "circulation_cosine");
        if (type != "circulation_cosine")
          throw PreconditionError("unknown forcing type: " + type);
        Forcing forcing;
        forcing.amplitude = f.at("amplitude").get<double>();
        forcing.period = f.at("period").get<double>();
        dyn.forcing = forcing;
      }
      cfg.ulam = UlamDescriptor{grid, dyn, u.value("slices", 0)};
    }
    if (!cfg.chain_file && !cfg.ulam)
      throw PreconditionError("config needs exactly one chain source (chain_file or ulam)");
    if (cfg.chain_file && cfg.ulam)
      throw PreconditionError("config must not name two chain sources");

    if (j.contains("set_A")) cfg.set_a = detail::set_spec_from_json(j.at("set_A"));
    if (j.contains("set_B")) cfg.set_b = detail::set_spec_from_json(j.at("set_B"));
    if (j.contains("regime")) {
      const std::string r = j.at("regime").get<std::string>();
      if (r == "finite") {
        cfg.rewindow_finite = true;
        cfg.horizon = j.at("horizon").get<int>();
        if (cfg.horizon < 2) throw PreconditionError("horizon must be >= 2");
        if (j.contains("initial_density") && j.at("initial_density").is_array())
          cfg.initial_density = j.at("initial_density").get<std::vector<double>>();
      } else if (r != "as_given") {
        throw PreconditionError("regime override must be \"finite\" or \"as_given\"");
      }
    }
    if (j.contains("windows")) cfg.windows = j.at("windows").get<std::vector<int>>();
    cfg.seed = j.value("seed", 0ull);
    if (j.contains("simulate")) {
      cfg.sim_length = j.at("simulate").value("length", 100000ll);
      cfg.sim_ensemble = j.at("simulate").value("ensemble", 0);
    }
    if (j.contains("tolerances")) detail::apply_tolerance_overrides(cfg.tolerances, j.at("tolerances"));
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

/// Everything the commands operate on after the config is resolved:
/// the chain itself, the sets, optional grid geometry, and a provenance
/// block for the run metadata.
struct RealizedExperiment {
  ChainSpec spec;
  AbSets sets;
  std::optional<UlamGrid> grid;
  json provenance;
};

inline RealizedExperiment realize_experiment(const ExperimentConfig& cfg, std::uint64_t seed,
                                             int threads = 0) {
  json provenance;
  provenance["seed"] = seed;
  provenance["generator"] = kGeneratorId;

  std::optional<ChainSpec> spec;
  std::optional<UlamGrid> grid;
  std::optional<AbSets> sets;

  if (cfg.chain_file) {
    const std::filesystem::path p(*cfg.chain_file);
    const auto resolved = p.is_absolute() ? p : std::filesystem::path(cfg.base_dir) / p;
    ChainDocument doc = load_chain_file(resolved.string());
    spec = std::move(doc.spec);
    grid = doc.grid;
    sets = std::move(doc.sets);
    provenance["chain_file"] = resolved.string();
  } else {
    const UlamDescriptor& u = *cfg.ulam;
    grid = u.grid;
    provenance["ulam"] = {{"potential", u.dynamics.potential.name()},
                          {"sigma", u.dynamics.sigma},
                          {"tau", u.dynamics.tau},
                          {"euler_dt", u.dynamics.euler_dt},
                          {"samples_per_cell", u.dynamics.samples_per_cell},
                          {"slices", u.slices}};
    if (u.slices > 0) {
      spec = PeriodicSpec{build_periodic_family(u.grid, u.dynamics, u.slices, seed, threads)};
    } else {
      LangevinSpec stationary_dyn = u.dynamics;
      stationary_dyn.forcing.reset();
      spec = StationarySpec{estimate_transition_matrix(u.grid, stationary_dyn, 0.0, seed, threads)};
    }
  }

  const int n_states = n_states_of(*spec);
  auto resolve_set = [&](const SetSpec& s, const char* which) {
    if (const auto* idx = std::get_if<std::vector<int>>(&s)) return *idx;
    const auto& disk = std::get<DiskSpec>(s);
    if (!grid)
      throw PreconditionError(std::string("disk set for ") + which + " needs grid geometry");
    provenance[std::string("disk_") + which] = {{"center", {disk.cx, disk.cy}},
                                                {"radius", disk.radius}};
    return cells_in_disk(*grid, disk.cx, disk.cy, disk.radius);
  };

  std::optional<SetSpec> set_a = cfg.set_a, set_b = cfg.set_b;
  // Default triple-well geometry: disks of radius 0.25 around the deep wells.
  if (!sets && !set_a && cfg.ulam && cfg.ulam->dynamics.potential.kind == Potential::Kind::triple_well) {
    set_a = DiskSpec{-1.0, 0.0, 0.4};
    set_b = DiskSpec{1.0, 0.0, 0.4};
  }
  if (set_a || set_b) {
    if (!set_a || !set_b)
      throw PreconditionError("set_A and set_B must be given together");
    sets = AbSets(resolve_set(*set_a, "A"), resolve_set(*set_b, "B"));
  }
  if (!sets) throw PreconditionError("no A/B sets: give set_A/set_B or use a chain file with sets");

  if (cfg.rewindow_finite) {
    const auto* s = std::get_if<StationarySpec>(&*spec);
    if (!s)
      throw PreconditionError("finite re-windowing requires a stationary chain source");
    FiniteSpec f;
    f.matrices.assign(cfg.horizon - 1, s->matrix);
    // Default start: the stationary density. Reducible estimates (possible
    // for low-noise Ulam chains) start from the largest closed class.
    f.initial_density = cfg.initial_density
                            ? *cfg.initial_density
                            : stationary_density_on_closed_class(s->matrix, cfg.tolerances);
    if (static_cast<int>(f.initial_density.size()) != n_states)
      throw PreconditionError("initial density length does not match the chain");
    provenance["rewindow"] = {{"horizon", cfg.horizon},
                              {"initial_density",
                               cfg.initial_density ? "explicit" : "stationary"}};
    spec = std::move(f);
  }

  return RealizedExperiment{std::move(*spec), std::move(*sets), grid, std::move(provenance)};
}

// ---------------------------------------------------------------------------
// Result writers

inline void write_committors_csv(const std::string& path, const CommittorField& field) {
  std::ostringstream out;
  out << "slice,state,q_plus,q_minus\n";
  for (std::size_t n = 0; n < field.forward.size(); ++n)
    for (std::size_t i = 0; i < field.forward[n].size(); ++i)
      out << n << ',' << i << ',' << format_double(field.forward[n][i]) << ','
          << format_double(field.backward[n][i]) << '\n';
  write_file(path, out.str());
}

inline json committors_to_json(const CommittorField& field) {
  json slices = json::array();
  for (std::size_t n = 0; n < field.forward.size(); ++n)
    slices.push_back({{"n", n}, {"q_plus", field.forward[n]}, {"q_minus", field.backward[n]}});
  return json{{"regime", regime_name(field.regime)},
              {"residual_forward", field.residual_forward},
              {"residual_backward", field.residual_backward},
              {"slices", std::move(slices)}};
}

inline void write_stats_csv(const std::string& dir, const ReactiveStats& stats) {
  {
    std::ostringstream out;
    out << "slice,z,k_out_a,k_in_b\n";
    const int slices = static_cast<int>(stats.z.size());
    for (int n = 0; n < slices; ++n) {
      out << n << ',' << format_double(stats.z[n]) << ',';
      const bool has_out = stats.regime != Regime::finite || n < slices - 1;
      if (has_out) out << format_double(stats.rate_out_a[n]);
      out << ',';
      if (stats.regime == Regime::stationary) {
        out << format_double(stats.rate_in_b[0]);
      } else if (stats.regime == Regime::periodic) {
        const int m = static_cast<int>(stats.rate_in_b.size());
        out << format_double(stats.rate_in_b[(n - 1 + m) % m]);
      } else if (n >= 1) {
        out << format_double(stats.rate_in_b[n - 1]);
      }
      out << '\n';
    }
    write_file(dir + "/stats.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "slice,state,mu,mu_hat\n";
    for (std::size_t n = 0; n < stats.mu.size(); ++n)
      for (std::size_t i = 0; i < stats.mu[n].size(); ++i) {
        out << n << ',' << i << ',' << format_double(stats.mu[n][i]) << ',';
        if (stats.mu_hat[n]) out << format_double((*stats.mu_hat[n])[i]);
        out << '\n';
      }
    write_file(dir + "/mu.csv", out.str());
  }
  if (stats.currents_stored) {
    std::ostringstream out;
    out << "slice,i,j,f,f_plus\n";
    for (std::size_t n = 0; n < stats.current.size(); ++n) {
      const Matrix& f = stats.current[n];
      const Matrix& fe = stats.effective[n];
      for (int i = 0; i < f.rows(); ++i)
        for (int j = 0; j < f.cols(); ++j)
          if (f(i, j) != 0.0 || fe(i, j) != 0.0)
            out << n << ',' << i << ',' << j << ',' << format_double(f(i, j)) << ','
                << format_double(fe(i, j)) << '\n';
    }
    write_file(dir + "/current.csv", out.str());
  }
}

inline json stats_to_json(const ReactiveStats& stats) {
  json slices = json::array();
  const int slice_total = static_cast<int>(stats.z.size());
  for (int n = 0; n < slice_total; ++n) {
    json s;
    s["n"] = n;
    s["mu"] = stats.mu[n];
    s["mu_hat"] = stats.mu_hat[n] ? json(*stats.mu_hat[n]) : json(nullptr);
    s["z"] = stats.z[n];
    const bool has_out = stats.regime != Regime::finite || n < slice_total - 1;
    s["k_out_a"] = has_out ? json(stats.rate_out_a[n]) : json(nullptr);
    if (stats.regime == Regime::stationary)
      s["k_in_b"] = stats.rate_in_b[0];
    else if (stats.regime == Regime::periodic)
      s["k_in_b"] = stats.rate_in_b[(n - 1 + slice_total) % slice_total];
    else
      s["k_in_b"] = n >= 1 ? json(stats.rate_in_b[n - 1]) : json(nullptr);
    if (stats.currents_stored && n < static_cast<int>(stats.current.size())) {
      json triples = json::array();
      const Matrix& f = stats.current[n];
      const Matrix& fe = stats.effective[n];
      for (int i = 0; i < f.rows(); ++i)
        for (int j = 0; j < f.cols(); ++j)
          if (f(i, j) != 0.0 || fe(i, j) != 0.0)
            triples.push_back({i, j, f(i, j), fe(i, j)});
      s["current"] = std::move(triples);
    }
    slices.push_back(std::move(s));
  }
  json aggregates;
  aggregates["k_ab"] = stats.k_ab;
  aggregates["k_ab_from_inflow"] = stats.k_ab_from_inflow;
  aggregates["z_ab"] = stats.z_aggregate ? json(*stats.z_aggregate) : json(nullptr);
  aggregates["t_ab"] = stats.t_aggregate ? json(*stats.t_aggregate) : json(nullptr);
  return json{{"regime", regime_name(stats.regime)},
              {"slices", std::move(slices)},
              {"aggregates", std::move(aggregates)}};
}

inline json conservation_to_json(const ConservationReport& report, double tol) {
  return json{{"max_node_violation", report.max_node_violation},
              {"worst_slice", report.worst_slice},
              {"worst_state", report.worst_state},
              {"boundary_residual", report.boundary_residual},
              {"tolerance", tol},
              {"pass", report.pass(tol)}};
}

/// Plot-ready effective-current glyphs: for each cell the vector
/// sum_j f+_ij * (unit vector towards cell j), evaluated on the grid.
inline void write_current_vectors_csv(const std::string& path, const UlamGrid& grid,
                                      const std::vector<std::pair<int, Matrix>>& effective_slices) {
  std::ostringstream out;
  out << "slice,cell,x,y,vx,vy\n";
  for (const auto& [slice, fe] : effective_slices) {
    for (int i = 0; i < fe.rows(); ++i) {
      double xi, yi;
      grid.midpoint(i, xi, yi);
      double vx = 0.0, vy = 0.0;
      for (int j = 0; j < fe.cols(); ++j) {
        if (j == i || fe(i, j) == 0.0) continue;
        double xj, yj;
        grid.midpoint(j, xj, yj);
        double ux = xj - xi, uy = yj - yi;
        const double norm = std::sqrt(ux * ux + uy * uy);
        if (norm == 0.0) continue;
        vx += fe(i, j) * ux / norm;
        vy += fe(i, j) * uy / norm;
      }
      out << slice << ',' << i << ',' << format_double(xi) << ',' << format_double(yi) << ','
          << format_double(vx) << ',' << format_double(vy) << '\n';
    }
  }
  write_file(path, out.str());
}

inline void write_trajectories_csv(const std::string& path,
                                   const std::vector<TrajectorySample>& trajectories,
                                   int n_states, std::uint64_t seed) {
  std::ostringstream out;
  const std::size_t length = trajectories.empty() ? 0 : trajectories.front().states.size();
  out << "# n_states=" << n_states << " length=" << length << " seed=" << seed
      << " generator=" << kGeneratorId << "\n";
  out << "traj,step,state\n";
  for (std::size_t k = 0; k < trajectories.size(); ++k)
    for (std::size_t t = 0; t < trajectories[k].states.size(); ++t)
      out << k << ',' << t << ',' << trajectories[k].states[t] << '\n';
  write_file(path, out.str());
}

inline json tolerances_to_json(const Tolerances& t) {
  return json{{"row_sum", t.row_sum},
              {"density_sum", t.density_sum},
              {"stationary_residual", t.stationary_residual},
              {"power_target", t.power_target},
              {"committor_residual", t.committor_residual},
              {"committor_clip", t.committor_clip},
              {"conservation", t.conservation},
              {"method_agreement", t.method_agreement}};
}

inline json diagnostics_to_json(const std::vector<Diagnostic>& diags) {
  json out = json::array();
  for (const auto& d : diags)
    out.push_back({{"severity", d.severity == Severity::error ? "error" : "info"},
                   {"code", d.code},
                   {"message", d.message}});
  return out;
}

}  // namespace tpt

#endif  // TPT_IO_HPP
