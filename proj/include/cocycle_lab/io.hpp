#pragma once

#include <iosfwd>

#include "cocycle_lab/criterion.hpp"
#include "cocycle_lab/spectrum.hpp"

namespace cocycle_lab {

/// Shortest decimal form that re-parses to the identical double.
std::string format_double(double x);

/// "left|core|right" over the alphabet digits, with "@offset" appended when
/// the core is anchored away from 0 (commas separate symbols past digit 9).
std::string format_point(const SymbolicPoint& x);
SymbolicPoint parse_point(const std::string& text, int alphabet_size);

/// Row-major matrix block: d lines of 2d numbers (re im interleaved).
void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in, int rows, int cols);

/// Cocycle table file: header (alphabet, dimension, field, window, theta,
/// eta, optional transitions), then one record per window word.  Re-parsing
/// reproduces every entry bit-exactly.
void save_cocycle(const std::string& path, const Cocycle& a, const ShiftSystem& system);
std::pair<Cocycle, ShiftSystem> load_cocycle(const std::string& path);

void save_certificate(const std::string& path, const SimplicityCertificate& cert,
                      const ShiftSystem& system);

/// Recomputes the period matrix, transition map and both margins from the
/// cocycle file and the certificate's witnesses; 0 when every recorded value
/// is reproduced within `tolerance`, 1 on the first divergence (named in
/// `diag`), 2 on parse failure.
int verify_certificate(const std::string& certificate_path, const std::string& cocycle_path,
                       std::ostream& diag, double tolerance = 1e-8);

}  // namespace cocycle_lab
