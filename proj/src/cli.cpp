#include "openext/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "openext/io.hpp"

namespace openext::cli {

namespace {

using io::Json;

struct RunConfig {
  std::string command;
  std::string input;
  std::string out_path;
  std::optional<double> tol_herm, tol_orth, tol_rank, tol_cluster, tol_residual;
  Tolerances tol;

  // kernel
  double t0 = 0, t1 = 10;
  std::size_t steps = 101;
  bool hidden = false;

  // check
  std::uint64_t seed = DissipationOptions{}.seed;
  std::size_t trials = DissipationOptions{}.trials;

  // simulate
  std::string forcing = "pulse";
  std::string direction;
  double amplitude = 1, t_on = 0, t_off = 1, frequency = 1;
  double dt = 1e-3, horizon = 5;
  bool open = false, full = false, both = false;
  std::string report_path;

  // lattice
  int d = 1, L = 0;
  Index n = 1;
  std::optional<std::size_t> j_count;
  std::vector<std::string> gammas;
  double mass = 1, stiffness = 1;
  std::vector<int> scan;
  Index budget = kDefaultLatticeBudget;

  // fit
  std::size_t max_atoms = FitOptions{}.max_atoms;
  std::optional<double> max_frequency;
};

class Runner {
 public:
  Runner(RunConfig cfg, std::ostream& out, std::ostream& err) : cfg_(std::move(cfg)), out_(out), err_(err) {}

  int dispatch() {
    static const std::map<std::string, int (Runner::*)()> table = {
        {"validate", &Runner::validate}, {"extend", &Runner::extend},       {"kernel", &Runner::kernel},
        {"decompose", &Runner::decompose}, {"channels", &Runner::channels}, {"canonical", &Runner::canonical},
        {"check", &Runner::check},       {"simulate", &Runner::simulate},   {"lattice", &Runner::lattice},
        {"fit", &Runner::fit}};
    const auto it = table.find(cfg_.command);
    if (it == table.end()) throw ValidationError("unknown command '" + cfg_.command + "'");
    return (this->*(it->second))();
  }

 private:
  const Tolerances& tol() const { return cfg_.tol; }

  void load_input() {
    text_ = io::read_file(cfg_.input);
    digest_ = io::digest(text_);
  }

  io::Document load_document() {
    load_input();
    return io::document_from_json(io::parse_json(text_), tol());
  }

  ConservativeSystem load_system() {
    auto doc = load_document();
    if (auto* s = std::get_if<ConservativeSystem>(&doc)) return std::move(*s);
    throw ValidationError("'" + cfg_.input + "' is not a conservative system ({n1, n2, omega})");
  }

  Json report() const { return io::envelope(cfg_.command, tol(), digest_); }

  void emit(const std::string& text) {
    if (cfg_.out_path.empty()) {
      out_ << text;
      out_.flush();
    } else {
      io::write_atomic(cfg_.out_path, text);
    }
  }
  void emit(const Json& j) { emit(io::dump(j)); }

  int validate() {
    load_input();
    const Json j = io::parse_json(text_);
    Json r = report();
    ValidationReport v;
    if (j.is_object() && j.contains("atoms")) {
      r["kind"] = "measure";
      v = openext::validate(io::measure_from_json(j, tol()), tol());
    } else if (j.is_object() && j.contains("omega1")) {
      r["kind"] = "open_system";
      v = openext::validate(io::open_system_from_json(j, tol()), tol());
    } else if (j.is_object() && j.contains("omega") && !j.contains("mass")) {
      r["kind"] = "system";
      const Matrix omega = io::matrix_from_json(j.at("omega"));
      const Index n1 = j.contains("n1") && j.at("n1").is_number_integer() ? j.at("n1").get<Index>() : -1;
      if (n1 < 0) throw ValidationError("missing field 'n1'");
      v = validate_system(omega, n1, tol());
      if (j.contains("n2") && j.at("n2").is_number_integer() && j.at("n2").get<Index>() + n1 != omega.rows()) {
        v.violations.push_back({"shape", "n1 + n2 does not match the size of omega", 0, std::nullopt});
      }
    } else {
      r["kind"] = "system";
      v = openext::validate(io::system_from_json(j, tol()), tol());
    }
    r["validation"] = io::to_json(v);
    emit(r);
    for (const auto& violation : v.violations) {
      err_ << "violation [" << violation.code << "]";
      if (violation.index) err_ << " at index " << *violation.index;
      err_ << ": " << violation.message << "\n";
    }
    return v.ok() ? kSuccess : kValidationFailure;
  }

  int extend() {
    auto doc = load_document();
    const auto* measure = std::get_if<PointMeasure>(&doc);
    if (!measure) throw ValidationError("extend expects a measure document ({dim, atoms})");
    const auto system = minimal_extension(*measure, tol());
    Json r = io::to_json(system);
    const Json envelope = report();
    for (const auto& [key, value] : envelope.items()) {
      if (key != "schema") r[key] = value;
    }
    emit(r);
    return kSuccess;
  }

  int kernel() {
    if (cfg_.steps < 1) throw ValidationError("--steps must be at least 1");
    if (cfg_.t0 < 0 || cfg_.t1 < cfg_.t0) throw ValidationError("kernel times need 0 <= t0 <= t1");
    auto doc = load_document();
    const auto times = linspace(cfg_.t0, cfg_.t1, cfg_.steps);
    KernelSamples samples;
    if (const auto* s = std::get_if<ConservativeSystem>(&doc)) {
      samples = cfg_.hidden ? kernel_eval_hidden(*s, times, tol()) : kernel_eval(*s, times, tol());
    } else if (const auto* m = std::get_if<PointMeasure>(&doc)) {
      samples = kernel_eval(*m, times);
    } else {
      samples = kernel_eval(std::get<OpenSystem>(doc).kernel(), times);
    }
    emit(io::kernel_csv(samples));
    return kSuccess;
  }

  int decompose() {
    const auto system = load_system();
    const auto parts = coupled_parts(system, tol());
    const auto strings = string_decomposition(system, tol());
    const auto bounds = check_multiplicity_bounds(system, tol());
    Json r = report();
    r["dims"] = {{"n1", system.n1()},
                 {"n2", system.n2()},
                 {"h1c", parts.h1c.dim()},
                 {"h1d", parts.h1d.dim()},
                 {"h2c", parts.h2c.dim()},
                 {"h2d", parts.h2d.dim()},
                 {"minimal_subsystem", system.n1() + parts.h2c.dim()},
                 {"reconstructible_core", parts.h1c.dim() + parts.h2c.dim()},
                 {"strings", strings.strings.size()}};
    r["coupled_parts"] = io::to_json(parts);
    r["strings"] = io::to_json(strings);
    r["multiplicity_bounds"] = io::to_json(bounds);
    emit(r);
    for (const auto& v : bounds.violations) err_ << "bound violated: " << v << "\n";
    return kSuccess;
  }

  int channels() {
    const auto system = load_system();
    const auto ch = openext::channels(system, tol());
    const auto p1 = eigenspace_partition(system.omega1(), 1);
    const auto p2 = eigenspace_partition(system.omega2(), 2);
    Json r = report();
    r["channels"] = io::to_json(ch);
    r["partition"] = "eigenspaces";
    r["coupling_matrix"] = io::to_json(coupling_matrix(system, p1, p2, tol()));
    emit(r);
    return kSuccess;
  }

  int canonical() {
    const auto system = load_system();
    Json r = report();
    r["decomposition"] = io::to_json(canonical_decomposition(system, tol()));
    emit(r);
    return kSuccess;
  }

  int check() {
    auto doc = load_document();
    DissipationOptions options;
    options.seed = cfg_.seed;
    options.trials = cfg_.trials;
    Json r = report();
    DissipationReport dissipation;
    if (const auto* s = std::get_if<ConservativeSystem>(&doc)) {
      dissipation = check_dissipation(measure_of(*s, tol()), options, tol());
      r["dissipation"] = io::to_json(dissipation);
      r["reconstructibility"] = io::to_json(is_reconstructible(*s, tol()));
    } else if (const auto* m = std::get_if<PointMeasure>(&doc)) {
      dissipation = check_dissipation(*m, options, tol());
      r["dissipation"] = io::to_json(dissipation);
    } else {
      dissipation = check_dissipation(std::get<OpenSystem>(doc).kernel(), options, tol());
      r["dissipation"] = io::to_json(dissipation);
    }
    emit(r);
    if (!dissipation.pass()) {
      err_ << "dissipation check failed";
      if (dissipation.witness_atom) {
        err_ << ": atom " << *dissipation.witness_atom << " has min eigenvalue " << dissipation.witness_min_eigenvalue;
      }
      err_ << "\n";
      return kValidationFailure;
    }
    return kSuccess;
  }

  int simulate() {
    if (!(cfg_.dt > 0) || !(cfg_.horizon > 0)) throw ValidationError("--dt and --T must be positive");
    const int modes = int(cfg_.open) + int(cfg_.full) + int(cfg_.both);
    if (modes > 1) throw ValidationError("choose one of --open, --full, --both");
    auto doc = load_document();
    if (std::holds_alternative<PointMeasure>(doc)) throw ValidationError("simulate needs a system or an open system");
    const auto* system = std::get_if<ConservativeSystem>(&doc);
    const bool full = cfg_.full || (modes == 0 && system);
    if ((full || cfg_.both) && !system) throw ValidationError("--full and --both need a conservative system");

    const auto steps = static_cast<std::size_t>(std::llround(cfg_.horizon / cfg_.dt));
    if (steps < 1) throw ValidationError("--T must be at least one step --dt");
    const auto grid = linspace(0.0, static_cast<double>(steps) * cfg_.dt, steps + 1);
    const Index n1 = system ? system->n1() : std::get<OpenSystem>(doc).dim();
    const ForcingSamples f1 = forcing(grid, n1);

    if (cfg_.both) {
      const auto eq = equivalence(*system, f1, grid, tol());
      Json r = report();
      r["equivalence"] = io::to_json(eq);
      if (cfg_.report_path.empty()) {
        err_ << r.dump() << "\n";
      } else {
        io::write_atomic(cfg_.report_path, io::dump(r));
      }
      emit(io::trajectory_csv(eq.open));
      return kSuccess;
    }
    if (full) {
      ForcingSamples f;
      for (const auto& v : f1) {
        Vector g = Vector::Zero(system->dim());
        g.head(n1) = v;
        f.push_back(std::move(g));
      }
      emit(io::trajectory_csv(propagate_conservative(*system, Vector::Zero(system->dim()), f, grid, {}, tol())));
      return kSuccess;
    }
    const OpenSystem open = system ? OpenSystem(system->omega1(), measure_of(*system, tol())) : std::get<OpenSystem>(doc);
    emit(io::trajectory_csv(propagate_open(open, f1, grid, {}, tol())));
    return kSuccess;
  }

  int lattice() {
    LatticeSpec spec;
    if (!cfg_.input.empty()) {
      load_input();
      spec = io::lattice_spec_from_json(io::parse_json(text_));
    } else {
      spec.d = cfg_.d;
      spec.L = cfg_.L;
      spec.n = cfg_.n;
      spec.mass = cfg_.mass;
      spec.stiffness = cfg_.stiffness;
      for (const auto& g : cfg_.gammas) spec.gammas.push_back(parse_real_list(g).cast<double>());
      if (cfg_.j_count && *cfg_.j_count != spec.gammas.size()) {
        throw ValidationError("--J " + std::to_string(*cfg_.j_count) + " does not match " +
                              std::to_string(spec.gammas.size()) + " --gammas vectors");
      }
      digest_ = io::digest(io::to_json(spec).dump());
    }
    if (!cfg_.scan.empty()) {
      emit(io::scan_csv(multiplicity_scan(spec, cfg_.scan, cfg_.budget, tol())));
      return kSuccess;
    }
    const auto frozen = frozen_report(spec, cfg_.budget, tol());
    Json r = report();
    r["spec"] = io::to_json(spec);
    r["stiffness_assembly"] = "K = xi*I + 2*sum_j B (x) g_j g_j^T, V(q) = q^T K q / 2, Dirichlet closure";
    r["frozen"] = io::to_json(frozen);
    emit(r);
    return kSuccess;
  }

  int fit() {
    load_input();
    const auto samples = io::parse_kernel_csv(text_);
    FitOptions options;
    options.max_atoms = cfg_.max_atoms;
    options.max_frequency = cfg_.max_frequency;
    const auto result = fit_point_measure(samples, options, tol());
    Json r = io::to_json(result);
    const Json envelope = report();
    for (const auto& [key, value] : envelope.items()) {
      if (key != "schema") r[key] = value;
    }
    emit(r);
    return kSuccess;
  }

  ForcingSamples forcing(const std::vector<double>& grid, Index n1) {
    const auto kinds = {"step", "pulse", "sine"};
    if (std::find(kinds.begin(), kinds.end(), cfg_.forcing) == kinds.end()) {
      const auto [times, values] = io::parse_vector_csv(io::read_file(cfg_.forcing));
      if (values.empty() || values.front().size() != n1) {
        throw ValidationError("forcing CSV must have " + std::to_string(n1) + " components");
      }
      return io::resample(times, values, grid);
    }
    ForcingSpec spec;
    spec.kind = ForcingSpec::parse_kind(cfg_.forcing);
    spec.amplitude = cfg_.amplitude;
    spec.t_on = cfg_.t_on;
    spec.t_off = cfg_.t_off;
    spec.frequency = cfg_.frequency;
    if (cfg_.direction.empty()) {
      spec.direction = Vector::Zero(n1);
      if (n1 > 0) spec.direction(0) = 1;
    } else {
      spec.direction = parse_real_list(cfg_.direction).cast<Complex>();
      if (spec.direction.size() != n1) throw ValidationError("--direction must have " + std::to_string(n1) + " entries");
    }
    return spec.sample(grid);
  }

  static RealVector parse_real_list(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(item, &used));
        if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
      } catch (const std::logic_error&) {
        throw ValidationError("cannot parse number '" + item + "' in '" + text + "'");
      }
    }
    return Eigen::Map<RealVector>(values.data(), static_cast<Index>(values.size()));
  }

  BlockPartition eigenspace_partition(const HermitianOperator& op, int side) const {
    const auto res = spectral_resolution(op, tol());
    std::vector<Subspace> parts;
    for (std::size_t c = 0; c < res.clusters.size(); ++c) parts.emplace_back(res.cluster_frame(c), tol());
    return BlockPartition(side, op.dim(), std::move(parts), tol());
  }

  RunConfig cfg_;
  std::ostream& out_;
  std::ostream& err_;
  std::string text_;
  std::string digest_;
};

Tolerances resolve_tolerances(const RunConfig& cfg) {
  Tolerances tol;
  if (const char* path = std::getenv("OPENEXT_TOLERANCES"); path && *path) {
    tol = io::tolerances_from_json(io::parse_json(io::read_file(path)), tol);
  }
  if (cfg.tol_herm) tol.herm = *cfg.tol_herm;
  if (cfg.tol_orth) tol.orth = *cfg.tol_orth;
  if (cfg.tol_rank) tol.rank = *cfg.tol_rank;
  if (cfg.tol_cluster) tol.eig_cluster = *cfg.tol_cluster;
  if (cfg.tol_residual) tol.residual = *cfg.tol_residual;
  tol.validate();
  return tol;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"openext: open linear systems and their minimal conservative extensions", "openext"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", io::library_version());
  app.add_option("--out,-o", cfg.out_path, "Write the report to this file instead of standard output");
  app.add_option("--tol-herm", cfg.tol_herm, "Hermiticity tolerance");
  app.add_option("--tol-orth", cfg.tol_orth, "Orthonormality tolerance");
  app.add_option("--tol-rank", cfg.tol_rank, "Relative rank cut");
  app.add_option("--tol-cluster", cfg.tol_cluster, "Relative eigenvalue clustering tolerance");
  app.add_option("--tol-residual", cfg.tol_residual, "Relative residual tolerance");

  const auto with_input = [&](CLI::App* sub, const char* what) {
    sub->add_option("input", cfg.input, what)->required()->check(CLI::ExistingFile);
    return sub;
  };
  with_input(app.add_subcommand("validate", "Validate a system, measure or open-system file"), "JSON document");
  with_input(app.add_subcommand("extend", "Minimal conservative extension of a point measure"), "measure JSON");

  auto* kernel = with_input(app.add_subcommand("kernel", "Sample the friction kernel as CSV"), "system or measure JSON");
  kernel->add_option("--t0", cfg.t0, "First time");
  kernel->add_option("--t1", cfg.t1, "Last time");
  kernel->add_option("--steps", cfg.steps, "Number of samples");
  kernel->add_flag("--hidden", cfg.hidden, "Sample the hidden-side kernel instead");

  with_input(app.add_subcommand("decompose", "Coupled/decoupled parts, strings and multiplicity bounds"), "system JSON");
  with_input(app.add_subcommand("channels", "Coupling channels and coupling matrix"), "system JSON");
  with_input(app.add_subcommand("canonical", "Finest s-invariant decomposition"), "system JSON");

  auto* check = with_input(app.add_subcommand("check", "Dissipation and reconstructibility verdicts"),
                           "system, measure or open-system JSON");
  check->add_option("--seed", cfg.seed, "Monte-Carlo seed");
  check->add_option("--trials", cfg.trials, "Monte-Carlo trials");

  auto* simulate = with_input(app.add_subcommand("simulate", "Propagate and write a trajectory CSV"),
                              "system or open-system JSON");
  simulate->add_option("--forcing", cfg.forcing, "step, pulse, sine, or a CSV file t,re_1,im_1,...");
  simulate->add_option("--direction", cfg.direction, "Forcing direction in H1 as comma-separated reals (default e1)");
  simulate->add_option("--amplitude", cfg.amplitude, "Forcing amplitude");
  simulate->add_option("--t-on", cfg.t_on, "Forcing switch-on time");
  simulate->add_option("--t-off", cfg.t_off, "Pulse switch-off time");
  simulate->add_option("--frequency", cfg.frequency, "Sine frequency");
  simulate->add_option("--dt", cfg.dt, "Time step");
  simulate->add_option("--T", cfg.horizon, "Final time");
  simulate->add_flag("--open", cfg.open, "Open system only");
  simulate->add_flag("--full", cfg.full, "Full conservative system only");
  simulate->add_flag("--both", cfg.both, "Both, with the equivalence residual");
  simulate->add_option("--report", cfg.report_path, "Equivalence report file for --both (default: standard error)");

  auto* lattice = app.add_subcommand("lattice", "Frozen-variable report or multiplicity scan for a lattice");
  lattice->add_option("spec", cfg.input, "LatticeSpec JSON (instead of the flags)")->check(CLI::ExistingFile);
  lattice->add_option("--d", cfg.d, "Lattice dimension");
  lattice->add_option("--L", cfg.L, "Cube half-width");
  lattice->add_option("--N", cfg.n, "DOFs per site");
  lattice->add_option("--J", cfg.j_count, "Number of coupling vectors");
  lattice->add_option("--gammas", cfg.gammas, "Coupling vectors, each as comma-separated reals");
  lattice->add_option("--mass", cfg.mass, "Site mass");
  lattice->add_option("--stiffness", cfg.stiffness, "On-site stiffness xi");
  lattice->add_option("--scan", cfg.scan, "Half-widths for a multiplicity scan")->delimiter(',');
  lattice->add_option("--budget", cfg.budget, "Largest total dimension allowed");

  auto* fit = with_input(app.add_subcommand("fit", "Fit a point measure to kernel samples"), "kernel CSV");
  fit->add_option("--max-atoms", cfg.max_atoms, "Largest number of atoms");
  fit->add_option("--max-frequency", cfg.max_frequency, "Bound on |omega|, checked against the Nyquist limit");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kValidationFailure;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  try {
    cfg.tol = resolve_tolerances(cfg);
    return Runner(std::move(cfg), out, err).dispatch();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumericFailure;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed input: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const std::exception& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumericFailure;
  }
}

}  // namespace openext::cli
