#pragma once

#include "behave/grassmann.hpp"
#include "behave/hankel.hpp"
#include "behave/lti.hpp"
#include "behave/predictor.hpp"

#include <iosfwd>
#include <string>
#include <string_view>

namespace behave::io {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Parses a finite double, rejecting trailing garbage.
double parse_double(std::string_view text, const std::string& where);

// Model files
//
//   # comment
//   n = 2
//   m = 1
//   p = 1
//   A = [0.8 0.2; 0.1 0.9]
//   B = [0.3; 0.7]
//   C = [1 1]
//   D = [0]
//
// Rows are separated by ';', entries by whitespace or ','. All seven keys are
// required; ragged rows and shapes that disagree with (n, m, p) are rejected.
StateSpaceModel<double> parse_model(std::istream& in, const std::string& source);
StateSpaceModel<double> read_model_file(const std::string& path);
void write_model(std::ostream& out, const StateSpaceModel<double>& model);

// Trajectory files: CSV with header t,u_0..u_{m-1},y_0..y_{p-1}, one row per
// sample. States are not stored.
void write_trajectory_csv(std::ostream& out, const Trajectory<double>& traj);
Trajectory<double> parse_trajectory_csv(std::istream& in,
                                        const std::string& source);
/// Also checks the header against the declared (m, p).
Trajectory<double> parse_trajectory_csv(std::istream& in,
                                        const std::string& source,
                                        Eigen::Index m, Eigen::Index p);
Trajectory<double> read_trajectory_file(const std::string& path);

// Basis files: one header line
//   # behave-basis m=<m> p=<p> Tini=<Tini> Tf=<Tf> r=<r>
// followed by q = (m+p)(Tini+Tf) comma-separated rows of r entries.
void write_basis(std::ostream& out, const PartitionedMatrix<double>& basis);
PartitionedMatrix<double> parse_basis(std::istream& in,
                                      const std::string& source);
PartitionedMatrix<double> read_basis_file(const std::string& path);

// Context files: key-value lines `u_ini = ...`, `u = ...`, `y_ini = ...` with
// time-major entries separated by whitespace or ','.
PredictionContext<double> parse_context(std::istream& in,
                                        const std::string& source,
                                        const BlockDims& dims);
PredictionContext<double> read_context_file(const std::string& path,
                                            const BlockDims& dims);
void write_context(std::ostream& out, const PredictionContext<double>& ctx);

}  // namespace behave::io
