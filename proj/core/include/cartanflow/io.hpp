#pragma once

#include <iosfwd>
#include <string>

#include "cartanflow/path.hpp"

namespace cartanflow::io {

/// Shortest round-trip decimal representation of a double.
std::string format_double(double x);

/// PathSpec JSON:
///   { "family": "herm-evd:4", "kind": "samples"|"trigpoly"|"builtin",
///     "domain": [a, b], "data": ... }
/// data per kind:
///   builtin:  { "name": "rellich" }
///   trigpoly: { "const": M, "cos": [M...], "sin": [M...] }
///   samples:  { "times": [...], "matrices": [M...] }
/// Matrices are row-major nested arrays; complex entries are [re, im] pairs.
/// Throws InputError / UnsupportedFamily on malformed input.
PathSpec parse_path_spec(const std::string& json_text);
std::string path_spec_to_json(const PathSpec& spec);

enum class OutputFormat { Csv, Json };

/// Column layout (versioned by the "# cartanflow v1" header line):
///   t, lambda_1..r, face, residual_offdiag, residual_group
///   [, lift_1..r][, mu_1..r][, u entries flattened column-major]
/// Complex entries appear as interleaved _re/_im columns in CSV and as
/// [re, im] pairs in JSON. Footer comments carry max-residual metadata.
void write_path(std::ostream& os, const DiagonalizedPath& path,
                OutputFormat format);

}  // namespace cartanflow::io
