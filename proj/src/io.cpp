#include "openext/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace openext::io {

namespace {

std::string format_double(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view field, std::size_t line) {
  while (!field.empty() && std::isspace(static_cast<unsigned char>(field.front()))) field.remove_prefix(1);
  while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back()))) field.remove_suffix(1);
  double x = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), x);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ValidationError("CSV line " + std::to_string(line) + ": cannot parse number '" + std::string(field) + "'");
  }
  return x;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

/// Non-empty lines with any trailing '\r' removed.
std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) out.push_back(line);
  }
  return out;
}

/// Rows of numbers below a header; every row must have `width` fields.
std::vector<std::vector<double>> numeric_rows(std::string_view text, std::size_t& width) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ValidationError("CSV is empty");
  width = split(lines[0], ',').size();
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split(lines[i], ',');
    if (fields.size() != width) {
      throw ValidationError("CSV line " + std::to_string(i + 1) + " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(width));
    }
    std::vector<double> row;
    for (auto f : fields) row.push_back(parse_double(f, i + 1));
    rows.push_back(std::move(row));
  }
  return rows;
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  return j.at(key);
}

Index index_field(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ValidationError(std::string("field '") + key + "' must be a nonnegative integer");
  }
  return static_cast<Index>(v.get<long long>());
}

double number_field(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number()) throw ValidationError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

void check_schema(const Json& j) {
  if (j.is_object() && j.contains("schema")) {
    const Json& s = j.at("schema");
    if (!s.is_string() || s.get<std::string>() != kSchema) {
      throw ValidationError("unsupported schema " + s.dump() + ", expected \"" + kSchema + "\"");
    }
  }
}

Json index_list(const std::vector<Index>& v) {
  Json out = Json::array();
  for (Index i : v) out.push_back(i);
  return out;
}

Json cluster_list(const std::vector<ClusterMultiplicity>& clusters) {
  Json out = Json::array();
  for (const auto& c : clusters) out.push_back({{"eigenvalue", c.eigenvalue}, {"multiplicity", c.multiplicity}});
  return out;
}

Json nullable(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace

std::string library_version() { return OPENEXT_VERSION; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_atomic(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ValidationError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw ValidationError("cannot rename onto '" + path + "': " + ec.message());
  }
}

std::string digest(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json to_json(Complex z) { return Json::array({nullable(z.real()), nullable(z.imag())}); }

Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(to_json(v(i)));
  return out;
}

Json to_json(const RealVector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(nullable(v(i)));
  return out;
}

Complex complex_from_json(const Json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw ValidationError("expected a number or an [re, im] pair, got " + j.dump());
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw ValidationError("matrix must be an array of rows");
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows ? static_cast<Index>(j[0].is_array() ? j[0].size() : 0) : 0;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw ValidationError("matrix row " + std::to_string(i) + " is not an array of length " + std::to_string(cols));
    }
    for (Index k = 0; k < cols; ++k) m(i, k) = complex_from_json(row[static_cast<std::size_t>(k)]);
  }
  return m;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw ValidationError("vector must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = complex_from_json(j[i]);
  return v;
}

RealVector real_vector_from_json(const Json& j) {
  if (!j.is_array()) throw ValidationError("vector must be an array");
  RealVector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ValidationError("expected a real number, got " + j[i].dump());
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

Json to_json(const Tolerances& tol) {
  return {{"herm", tol.herm},
          {"orth", tol.orth},
          {"rank", tol.rank},
          {"eig_cluster", tol.eig_cluster},
          {"residual", tol.residual}};
}

Tolerances tolerances_from_json(const Json& j, Tolerances base) {
  if (!j.is_object()) throw ValidationError("tolerances must be a JSON object");
  const std::pair<const char*, double*> fields[] = {{"herm", &base.herm},
                                                    {"orth", &base.orth},
                                                    {"rank", &base.rank},
                                                    {"eig_cluster", &base.eig_cluster},
                                                    {"residual", &base.residual}};
  for (const auto& [key, target] : fields) {
    if (j.contains(key)) *target = number_field(j, key);
  }
  for (const auto& item : j.items()) {
    bool known = false;
    for (const auto& f : fields) known = known || item.key() == f.first;
    if (!known) throw ValidationError("unknown tolerance '" + item.key() + "'");
  }
  base.validate();
  return base;
}

Json to_json(const ConservativeSystem& system) {
  Json j;
  j["schema"] = kSchema;
  j["n1"] = system.n1();
  j["n2"] = system.n2();
  j["omega"] = to_json(system.omega().matrix());
  return j;
}

ConservativeSystem system_from_json(const Json& j, const Tolerances& tol) {
  check_schema(j);
  const Index n1 = index_field(j, "n1");
  const Index n2 = index_field(j, "n2");
  const Matrix omega = matrix_from_json(field(j, "omega"));
  if (omega.rows() != n1 + n2 || omega.cols() != n1 + n2) {
    throw ValidationError("omega is " + std::to_string(omega.rows()) + "x" + std::to_string(omega.cols()) +
                          ", expected n1 + n2 = " + std::to_string(n1 + n2));
  }
  if (j.contains("mass")) return ConservativeSystem::from_mass_and_generator(matrix_from_json(j.at("mass")), omega, n1, tol);
  return ConservativeSystem::from_matrix(omega, n1, tol);
}

Json to_json(const PointMeasure& measure) {
  Json j;
  j["schema"] = kSchema;
  j["dim"] = measure.dim();
  Json atoms = Json::array();
  for (const auto& a : measure.atoms()) atoms.push_back({{"omega", a.frequency}, {"mass", to_json(a.mass.matrix())}});
  j["atoms"] = std::move(atoms);
  return j;
}

PointMeasure measure_from_json(const Json& j, const Tolerances& tol) {
  check_schema(j);
  const Index dim = index_field(j, "dim");
  const Json& atoms = field(j, "atoms");
  if (!atoms.is_array()) throw ValidationError("'atoms' must be an array");
  std::vector<Atom> out;
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    const Matrix mass = matrix_from_json(field(atoms[k], "mass"));
    if (mass.rows() != dim || mass.cols() != dim) {
      throw ValidationError("atom " + std::to_string(k) + " mass is not " + std::to_string(dim) + "x" +
                            std::to_string(dim));
    }
    const double omega = number_field(atoms[k], "omega");
    if (!std::isfinite(omega)) throw ValidationError("atom " + std::to_string(k) + " has a non-finite frequency");
    out.push_back({omega, HermitianOperator(mass, tol)});
  }
  return PointMeasure(dim, std::move(out), tol);
}

OpenSystem open_system_from_json(const Json& j, const Tolerances& tol) {
  check_schema(j);
  const HermitianOperator omega1(matrix_from_json(field(j, "omega1")), tol);
  const PointMeasure kernel = measure_from_json(field(j, "kernel"), tol);
  std::optional<Matrix> instantaneous;
  if (j.contains("instantaneous")) instantaneous = matrix_from_json(j.at("instantaneous"));
  return OpenSystem(omega1, kernel, instantaneous);
}

LatticeSpec lattice_spec_from_json(const Json& j) {
  check_schema(j);
  LatticeSpec s;
  s.d = static_cast<int>(index_field(j, "d"));
  s.L = static_cast<int>(index_field(j, "L"));
  s.n = index_field(j, "N");
  if (j.contains("mass")) s.mass = number_field(j, "mass");
  if (j.contains("stiffness")) s.stiffness = number_field(j, "stiffness");
  const Json& gammas = field(j, "gammas");
  if (!gammas.is_array()) throw ValidationError("'gammas' must be an array of vectors");
  for (const auto& g : gammas) s.gammas.push_back(real_vector_from_json(g));
  return s;
}

Json to_json(const LatticeSpec& spec) {
  Json gammas = Json::array();
  for (const auto& g : spec.gammas) gammas.push_back(to_json(g));
  return {{"d", spec.d},
          {"L", spec.L},
          {"N", spec.n},
          {"J", spec.gammas.size()},
          {"mass", spec.mass},
          {"stiffness", spec.stiffness},
          {"gammas", std::move(gammas)}};
}

Document document_from_json(const Json& j, const Tolerances& tol) {
  if (!j.is_object()) throw ValidationError("input document must be a JSON object");
  if (j.contains("atoms")) return measure_from_json(j, tol);
  if (j.contains("omega1")) return open_system_from_json(j, tol);
  if (j.contains("omega")) return system_from_json(j, tol);
  throw ValidationError("input is neither a system ({n1, n2, omega}), a measure ({dim, atoms}) nor an open system");
}

std::string kernel_csv(const KernelSamples& samples) {
  samples.validate();
  const Index n = samples.dim();
  std::string out = "t";
  for (Index i = 1; i <= n; ++i) {
    for (Index j = 1; j <= n; ++j) {
      const std::string ij = std::to_string(i) + "_" + std::to_string(j);
      out += ",re_" + ij + ",im_" + ij;
    }
  }
  out += '\n';
  for (std::size_t k = 0; k < samples.times.size(); ++k) {
    out += format_double(samples.times[k]);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        out += ',' + format_double(samples.values[k](i, j).real());
        out += ',' + format_double(samples.values[k](i, j).imag());
      }
    }
    out += '\n';
  }
  return out;
}

KernelSamples parse_kernel_csv(std::string_view text) {
  std::size_t width = 0;
  const auto rows = numeric_rows(text, width);
  const std::size_t entries = (width - 1) / 2;
  const auto n = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(entries))));
  if (width < 3 || (width - 1) % 2 != 0 || static_cast<std::size_t>(n * n) != entries) {
    throw ValidationError("kernel CSV needs 1 + 2n^2 columns, got " + std::to_string(width));
  }
  KernelSamples s;
  for (const auto& row : rows) {
    s.times.push_back(row[0]);
    Matrix m(n, n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        const auto c = static_cast<std::size_t>(1 + 2 * (i * n + j));
        m(i, j) = Complex(row[c], row[c + 1]);
      }
    }
    s.values.push_back(std::move(m));
  }
  s.validate();
  return s;
}

std::string trajectory_csv(const Trajectory& traj) {
  const Index n = traj.states.empty() ? 0 : traj.states.front().size();
  std::string out = "t";
  for (Index i = 1; i <= n; ++i) out += ",re_" + std::to_string(i) + ",im_" + std::to_string(i);
  out += '\n';
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    out += format_double(traj.times[k]);
    for (Index i = 0; i < n; ++i) {
      out += ',' + format_double(traj.states[k](i).real());
      out += ',' + format_double(traj.states[k](i).imag());
    }
    out += '\n';
  }
  return out;
}

std::pair<std::vector<double>, std::vector<Vector>> parse_vector_csv(std::string_view text) {
  std::size_t width = 0;
  const auto rows = numeric_rows(text, width);
  if (width < 3 || (width - 1) % 2 != 0) throw ValidationError("vector CSV needs 1 + 2n columns");
  const auto n = static_cast<Index>((width - 1) / 2);
  std::pair<std::vector<double>, std::vector<Vector>> out;
  for (const auto& row : rows) {
    out.first.push_back(row[0]);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = Complex(row[static_cast<std::size_t>(1 + 2 * i)], row[static_cast<std::size_t>(2 + 2 * i)]);
    out.second.push_back(std::move(v));
  }
  for (std::size_t k = 1; k < out.first.size(); ++k) {
    if (!(out.first[k] > out.first[k - 1])) throw ValidationError("CSV times must be strictly ascending");
  }
  return out;
}

ForcingSamples resample(const std::vector<double>& times, const std::vector<Vector>& values,
                        const std::vector<double>& grid) {
  if (times.empty()) throw ValidationError("forcing table is empty");
  const Index n = values.front().size();
  ForcingSamples out;
  out.reserve(grid.size());
  for (double t : grid) {
    if (t < times.front() || t > times.back()) {
      out.push_back(Vector::Zero(n));
      continue;
    }
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.end()) {
      out.push_back(values.back());
      continue;
    }
    const auto hi = static_cast<std::size_t>(it - times.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - times[lo]) / (times[hi] - times[lo]);
    out.push_back((1 - w) * values[lo] + w * values[hi]);
  }
  return out;
}

std::string scan_csv(const std::vector<ScanRow>& rows) {
  std::string out = "L,volume,max_mult,ratio\n";
  for (const auto& r : rows) {
    out += std::to_string(r.L) + ',' + std::to_string(r.volume) + ',' + std::to_string(r.max_mult) + ',' +
           format_double(r.ratio) + '\n';
  }
  return out;
}

Json to_json(const Subspace& s) {
  return {{"ambient_dim", s.ambient_dim()}, {"dim", s.dim()}, {"frame", to_json(s.frame())}};
}

Json to_json(const ValidationReport& r) {
  Json violations = Json::array();
  for (const auto& v : r.violations) {
    Json item = {{"code", v.code}, {"message", v.message}, {"magnitude", nullable(v.magnitude)}};
    item["index"] = v.index ? Json(*v.index) : Json(nullptr);
    violations.push_back(std::move(item));
  }
  return {{"ok", r.ok()}, {"violations", std::move(violations)}};
}

Json to_json(const CoupledParts& parts) {
  return {{"h1c", to_json(parts.h1c)},
          {"h1d", to_json(parts.h1d)},
          {"h2c", to_json(parts.h2c)},
          {"h2d", to_json(parts.h2d)},
          {"block_residual", parts.residual},
          {"min_gap_omega1", nullable(parts.min_gap_omega1)},
          {"min_gap_omega2", nullable(parts.min_gap_omega2)}};
}

Json to_json(const MultiplicityReport& r) {
  return {{"max_mult", r.max_mult},
          {"per_cluster", cluster_list(r.per_cluster)},
          {"invariance_residual", r.invariance_residual},
          {"min_gap", nullable(r.min_gap)}};
}

Json to_json(const MultiplicityBoundReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"value", c.value},
                      {"bound", c.bound},
                      {"applicable", c.applicable},
                      {"slack", c.bound - c.value},
                      {"satisfied", c.satisfied()}});
  }
  return {{"ok", r.ok()},
          {"rank_gamma", r.rank_gamma},
          {"dim_h1c", r.dim_h1c},
          {"dim_h_min", r.dim_h_min},
          {"h_min_identity", r.h_min_identity},
          {"omega_on_h_min", to_json(r.omega_on_h_min)},
          {"omega1_on_h1c", to_json(r.omega1_on_h1c)},
          {"omega2_on_h2c", to_json(r.omega2_on_h2c)},
          {"checks", std::move(checks)},
          {"violations", r.violations}};
}

Json to_json(const StringDecomposition& s) {
  Json strings = Json::array();
  for (std::size_t i = 0; i < s.strings.size(); ++i) {
    Json measure = Json::array();
    for (const auto& w : s.measures[i]) measure.push_back({{"eigenvalue", w.eigenvalue}, {"weight", w.weight}});
    strings.push_back({{"subspace", to_json(s.strings[i])}, {"measure", std::move(measure)}});
  }
  return {{"count", s.strings.size()}, {"strings", std::move(strings)}};
}

Json to_json(const ChannelSet& c) {
  Json groups = Json::array();
  for (const auto& g : c.degenerate_groups) groups.push_back(index_list(g));
  return {{"rank", c.rank},
          {"gammas", to_json(c.gammas)},
          {"g", to_json(c.g)},
          {"g_prime", to_json(c.g_prime)},
          {"degenerate_groups", std::move(groups)}};
}

Json to_json(const CouplingMatrix& m) {
  Json ranks = Json::array();
  for (Index i = 0; i < m.ranks.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.ranks.cols(); ++j) row.push_back(m.ranks(i, j));
    ranks.push_back(std::move(row));
  }
  return {{"ranks", std::move(ranks)}, {"zero_rows", index_list(m.zero_rows)}, {"zero_cols", index_list(m.zero_cols)}};
}

Json to_json(const SInvariantDecomposition& d) {
  Json components = Json::array();
  for (const auto& c : d.components) {
    components.push_back({{"decoupled", c.decoupled},
                          {"channels", index_list(c.channels)},
                          {"dim_h1", c.h1.dim()},
                          {"dim_h2", c.h2.dim()},
                          {"h1", to_json(c.h1)},
                          {"h2", to_json(c.h2)},
                          {"s_invariant", c.invariance.verdict},
                          {"omega_commutator", c.invariance.omega_commutator},
                          {"projection_commutator", c.invariance.projection_commutator}});
  }
  Json edges = Json::array();
  for (const auto& [p, q] : d.edges) edges.push_back(Json::array({p, q}));
  return {{"channels", to_json(d.channel_set)},
          {"component_count", d.components.size()},
          {"coupled_count", d.coupled_count()},
          {"assignment", index_list(d.assignment)},
          {"edges", std::move(edges)},
          {"block_residual", d.block_residual},
          {"components", std::move(components)}};
}

Json to_json(const DissipationReport& r) {
  Json trials = Json::array();
  for (const auto& t : r.trials) {
    trials.push_back({{"carrier", t.carrier}, {"value", t.value}, {"normalized", t.normalized}});
  }
  Json j = {{"pass", r.pass()},
            {"algebraic_checked", r.algebraic_checked},
            {"algebraic_pass", r.algebraic_pass}};
  j["witness_atom"] = r.witness_atom ? Json(*r.witness_atom) : Json(nullptr);
  j["witness_min_eigenvalue"] = r.witness_min_eigenvalue;
  j["monte_carlo_pass"] = r.monte_carlo_pass;
  j["first_negative_trial"] = r.first_negative_trial ? Json(*r.first_negative_trial) : Json(nullptr);
  j["min_normalized"] = r.min_normalized;
  j["seed"] = r.options.seed;
  j["trial_count"] = r.options.trials;
  j["grid_points"] = r.options.grid_points;
  j["horizon"] = r.options.horizon;
  j["trials"] = std::move(trials);
  return j;
}

Json to_json(const ReconstructibilityReport& r) {
  Json j = {{"reconstructible", r.reconstructible}};
  j["witness_eigenvalue"] = r.witness_eigenvalue ? Json(*r.witness_eigenvalue) : Json(nullptr);
  j["witness"] = r.witness.size() ? to_json(r.witness) : Json(nullptr);
  j["decoupled_parts_trivial"] = r.decoupled_parts_trivial;
  j["consistent"] = r.consistent();
  return j;
}

Json to_json(const FrozenReport& r) {
  return {{"volume", r.volume},
          {"span_dim", r.span_dim},
          {"frozen_frequency", r.frozen_frequency},
          {"frozen_dim_complex", r.frozen_dim_complex},
          {"frozen_dim_real", r.frozen_dim_real},
          {"dim_lower", r.dim_lower},
          {"dim_bound_satisfied", r.dim_bound_satisfied},
          {"frozen_eigen_residual", r.frozen_eigen_residual},
          {"frozen_exact", r.frozen_exact},
          {"full_multiplicity_at_frequency", r.full_multiplicity_at_frequency},
          {"coupled_max_mult", r.coupled_max_mult},
          {"mult_upper", r.mult_upper},
          {"mult_bound_satisfied", r.mult_bound_satisfied},
          {"coupled_mult_per_cluster", cluster_list(r.coupled_mult_per_cluster)},
          {"frozen_subspace", to_json(r.frozen_subspace)}};
}

Json to_json(const FitResult& r) {
  Json j = to_json(r.measure);
  j["fit"] = {{"condition", r.condition}, {"max_residual", r.max_residual}};
  return j;
}

Json to_json(const EquivalenceReport& r) {
  return {{"residual", r.residual},
          {"max_open_norm", r.max_open_norm},
          {"relative_residual", r.max_open_norm > 0 ? r.residual / r.max_open_norm : 0.0},
          {"full_scheme", r.full.scheme},
          {"open_scheme", r.open.scheme},
          {"dt", r.open.dt},
          {"steps", r.open.times.empty() ? 0 : r.open.times.size() - 1},
          {"full_norm_drift", r.full.norm_drift}};
}

Json envelope(const std::string& command, const Tolerances& tol, const std::string& input_digest) {
  return {{"schema", kSchema},
          {"command", command},
          {"version", library_version()},
          {"tolerances", to_json(tol)},
          {"input_digest", input_digest}};
}

}  // namespace openext::io
