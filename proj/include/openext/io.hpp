#pragma once

// JSON and CSV encodings of systems, measures, samples and reports.
//
// Complex scalars are [re, im] pairs and matrices are arrays of rows. Readers
// also accept plain real numbers wherever a complex scalar is expected.

#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "openext/coupling.hpp"
#include "openext/decomposition.hpp"
#include "openext/extension.hpp"
#include "openext/hamiltonian.hpp"
#include "openext/model.hpp"
#include "openext/simulate.hpp"

namespace openext::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "openext/v1";

std::string library_version();

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::string& path);
/// Writes through a temporary file in the same directory, then renames.
void write_atomic(const std::string& path, std::string_view content);
/// 64-bit FNV-1a of `bytes`, as 16 lowercase hex digits.
std::string digest(std::string_view bytes);

Json parse_json(std::string_view text);
/// Two-space indented, trailing newline.
std::string dump(const Json& j);

// ---------------------------------------------------------------------------
// Scalars and matrices

Json to_json(Complex z);
Json to_json(const Matrix& m);
Json to_json(const Vector& v);
Json to_json(const RealVector& v);

Complex complex_from_json(const Json& j);
Matrix matrix_from_json(const Json& j);
Vector vector_from_json(const Json& j);
RealVector real_vector_from_json(const Json& j);

// ---------------------------------------------------------------------------
// Model documents

Json to_json(const Tolerances& tol);
/// Overrides the fields present in `j` on top of `base`.
Tolerances tolerances_from_json(const Json& j, Tolerances base = {});

Json to_json(const ConservativeSystem& system);
/// {n1, n2, omega} with an optional block-diagonal "mass".
ConservativeSystem system_from_json(const Json& j, const Tolerances& tol = {});

Json to_json(const PointMeasure& measure);
PointMeasure measure_from_json(const Json& j, const Tolerances& tol = {});

/// {omega1, kernel}; an "instantaneous" term is parsed and rejected by OpenSystem.
OpenSystem open_system_from_json(const Json& j, const Tolerances& tol = {});

LatticeSpec lattice_spec_from_json(const Json& j);
Json to_json(const LatticeSpec& spec);

using Document = std::variant<ConservativeSystem, PointMeasure, OpenSystem>;
/// Dispatches on the keys present: "atoms", "omega1" or "omega".
Document document_from_json(const Json& j, const Tolerances& tol = {});

// ---------------------------------------------------------------------------
// CSV

/// Header `t, re_ij, im_ij, ...` with (i, j) in row-major order, 1-based.
std::string kernel_csv(const KernelSamples& samples);
KernelSamples parse_kernel_csv(std::string_view text);

/// Header `t, re_1, im_1, ...`.
std::string trajectory_csv(const Trajectory& traj);
/// Reads the trajectory layout back as (times, states).
std::pair<std::vector<double>, std::vector<Vector>> parse_vector_csv(std::string_view text);
/// Linear interpolation of tabulated samples onto `grid`; zero outside the table.
ForcingSamples resample(const std::vector<double>& times, const std::vector<Vector>& values,
                        const std::vector<double>& grid);

std::string scan_csv(const std::vector<ScanRow>& rows);

// ---------------------------------------------------------------------------
// Reports

Json to_json(const Subspace& s);
Json to_json(const ValidationReport& r);
Json to_json(const CoupledParts& parts);
Json to_json(const MultiplicityReport& r);
Json to_json(const MultiplicityBoundReport& r);
Json to_json(const StringDecomposition& s);
Json to_json(const ChannelSet& c);
Json to_json(const CouplingMatrix& m);
Json to_json(const SInvariantDecomposition& d);
Json to_json(const DissipationReport& r);
Json to_json(const ReconstructibilityReport& r);
Json to_json(const FrozenReport& r);
Json to_json(const FitResult& r);
Json to_json(const EquivalenceReport& r);

/// Header fields carried by every report.
Json envelope(const std::string& command, const Tolerances& tol, const std::string& input_digest);

}  // namespace openext::io
