#include "behave/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

namespace behave::io {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string location(const std::string& source, int line) {
  return source + ":" + std::to_string(line);
}

[[noreturn]] void fail(const std::string& where, const std::string& message) {
  throw InputError(where + ": " + message);
}

std::vector<double> parse_numbers(std::string_view text,
                                  const std::string& where) {
  std::vector<double> out;
  std::string token;
  const auto flush = [&] {
    if (!token.empty()) out.push_back(parse_double(token, where));
    token.clear();
  };
  for (const char c : text) {
    if (c == ' ' || c == '\t' || c == ',' || c == '\r')
      flush();
    else
      token.push_back(c);
  }
  flush();
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  return in;
}

/// Parses `[a b; c d]` into a dense matrix, rejecting ragged rows.
Matrix<double> parse_bracket_matrix(const std::string& text,
                                    const std::string& where) {
  const auto open = text.find('[');
  const auto close = text.rfind(']');
  if (open == std::string::npos || close == std::string::npos || close < open)
    fail(where, "matrix literal must be enclosed in [ ]");
  if (!trim(text.substr(close + 1)).empty())
    fail(where, "unexpected text after matrix literal");
  std::vector<std::vector<double>> rows;
  std::stringstream body(text.substr(open + 1, close - open - 1));
  std::string row;
  while (std::getline(body, row, ';')) rows.push_back(parse_numbers(row, where));
  if (rows.empty() || rows.front().empty()) fail(where, "empty matrix literal");
  const auto cols = rows.front().size();
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].size() != cols)
      fail(where, "ragged matrix: row " + std::to_string(i + 1) + " has " +
                      std::to_string(rows[i].size()) + " entries, expected " +
                      std::to_string(cols));
  Matrix<double> out(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
  return out;
}

Eigen::Index parse_positive_index(const std::string& text,
                                  const std::string& where) {
  Eigen::Index value = 0;
  const auto* begin = text.data();
  const auto* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || value < 1)
    fail(where, "expected a positive integer, got '" + text + "'");
  return value;
}

void write_matrix_literal(std::ostream& out, const Matrix<double>& a) {
  out << '[';
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (i > 0) out << "; ";
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (j > 0) out << ' ';
      out << format_double(a(i, j));
    }
  }
  out << ']';
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw NumericalError("cannot format floating value");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text, const std::string& where) {
  double value = 0.0;
  const auto* begin = text.data();
  const auto* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || begin == end)
    fail(where, "expected a number, got '" + std::string(text) + "'");
  if (!std::isfinite(value))
    fail(where, "non-finite value '" + std::string(text) + "'");
  return value;
}

StateSpaceModel<double> parse_model(std::istream& in,
                                    const std::string& source) {
  std::map<std::string, std::pair<std::string, int>> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = location(source, line_no);
    const std::string content = trim(line.substr(0, line.find('#')));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) fail(where, "expected 'key = value'");
    const std::string key = trim(content.substr(0, eq));
    if (key != "n" && key != "m" && key != "p" && key != "A" && key != "B" &&
        key != "C" && key != "D")
      fail(where, "unknown key '" + key + "'");
    if (entries.count(key)) fail(where, "duplicate key '" + key + "'");
    entries[key] = {trim(content.substr(eq + 1)), line_no};
  }
  for (const char* key : {"n", "m", "p", "A", "B", "C", "D"})
    if (!entries.count(key))
      fail(source, std::string("missing key '") + key + "'");

  const auto index_of = [&](const std::string& key) {
    const auto& [text, at] = entries.at(key);
    return parse_positive_index(text, location(source, at));
  };
  const auto n = index_of("n");
  const auto m = index_of("m");
  const auto p = index_of("p");
  const auto matrix_of = [&](const std::string& key, Eigen::Index rows,
                             Eigen::Index cols) {
    const auto& [text, at] = entries.at(key);
    const std::string where = location(source, at);
    Matrix<double> a = parse_bracket_matrix(text, where);
    if (a.rows() != rows || a.cols() != cols)
      fail(where, key + " is " + std::to_string(a.rows()) + "x" +
                      std::to_string(a.cols()) + ", expected " +
                      std::to_string(rows) + "x" + std::to_string(cols));
    return a;
  };
  return {matrix_of("A", n, n), matrix_of("B", n, m), matrix_of("C", p, n),
          matrix_of("D", p, m)};
}

StateSpaceModel<double> read_model_file(const std::string& path) {
  auto in = open_input(path);
  return parse_model(in, path);
}

void write_model(std::ostream& out, const StateSpaceModel<double>& model) {
  out << "n = " << model.n() << "\nm = " << model.m() << "\np = " << model.p()
      << '\n';
  const std::pair<const char*, const Matrix<double>*> mats[] = {
      {"A", &model.A()}, {"B", &model.B()}, {"C", &model.C()}, {"D", &model.D()}};
  for (const auto& [name, mat] : mats) {
    out << name << " = ";
    write_matrix_literal(out, *mat);
    out << '\n';
  }
}

void write_trajectory_csv(std::ostream& out, const Trajectory<double>& traj) {
  out << 't';
  for (Eigen::Index i = 0; i < traj.m(); ++i) out << ",u_" << i;
  for (Eigen::Index i = 0; i < traj.p(); ++i) out << ",y_" << i;
  out << '\n';
  for (Eigen::Index t = 0; t < traj.length(); ++t) {
    out << t;
    for (Eigen::Index i = 0; i < traj.m(); ++i)
      out << ',' << format_double(traj.inputs(i, t));
    for (Eigen::Index i = 0; i < traj.p(); ++i)
      out << ',' << format_double(traj.outputs(i, t));
    out << '\n';
  }
}

Trajectory<double> parse_trajectory_csv(std::istream& in,
                                        const std::string& source) {
  std::string header;
  if (!std::getline(in, header)) fail(source, "empty trajectory file");
  const auto cols = split_csv(trim(header));
  if (cols.empty() || cols.front() != "t")
    fail(location(source, 1), "header must start with 't'");
  Eigen::Index m = 0;
  Eigen::Index p = 0;
  for (std::size_t i = 1; i < cols.size(); ++i) {
    const bool is_u = cols[i].rfind("u_", 0) == 0;
    const bool is_y = cols[i].rfind("y_", 0) == 0;
    if (is_u && p == 0 && cols[i] == "u_" + std::to_string(m))
      ++m;
    else if (is_y && cols[i] == "y_" + std::to_string(p))
      ++p;
    else
      fail(location(source, 1), "unexpected header column '" + cols[i] +
                                    "' (expected t,u_0..u_{m-1},y_0..y_{p-1})");
  }
  if (m == 0 || p == 0)
    fail(location(source, 1), "header declares no inputs or no outputs");

  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string content = trim(line);
    if (content.empty()) continue;
    const std::string where = location(source, line_no);
    const auto cells = split_csv(content);
    if (static_cast<Eigen::Index>(cells.size()) != 1 + m + p)
      fail(where, "row has " + std::to_string(cells.size()) +
                      " columns, expected " + std::to_string(1 + m + p));
    const auto t = parse_double(cells[0], where);
    if (t != static_cast<double>(rows.size()))
      fail(where, "time index must count up from 0");
    std::vector<double> values;
    for (std::size_t i = 1; i < cells.size(); ++i)
      values.push_back(parse_double(cells[i], where));
    rows.push_back(std::move(values));
  }
  if (rows.empty()) fail(source, "trajectory has no samples");
  Trajectory<double> traj;
  const auto length = static_cast<Eigen::Index>(rows.size());
  traj.inputs.resize(m, length);
  traj.outputs.resize(p, length);
  for (Eigen::Index t = 0; t < length; ++t) {
    const auto& row = rows[static_cast<std::size_t>(t)];
    for (Eigen::Index i = 0; i < m; ++i)
      traj.inputs(i, t) = row[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i < p; ++i)
      traj.outputs(i, t) = row[static_cast<std::size_t>(m + i)];
  }
  return traj;
}

Trajectory<double> parse_trajectory_csv(std::istream& in,
                                        const std::string& source,
                                        Eigen::Index m, Eigen::Index p) {
  auto traj = parse_trajectory_csv(in, source);
  if (traj.m() != m || traj.p() != p)
    fail(location(source, 1),
         "header declares m = " + std::to_string(traj.m()) + ", p = " +
             std::to_string(traj.p()) + " but m = " + std::to_string(m) +
             ", p = " + std::to_string(p) + " were expected");
  return traj;
}

Trajectory<double> read_trajectory_file(const std::string& path) {
  auto in = open_input(path);
  return parse_trajectory_csv(in, path);
}

void write_basis(std::ostream& out, const PartitionedMatrix<double>& basis) {
  const auto& d = basis.dims();
  out << "# behave-basis m=" << d.m << " p=" << d.p << " Tini=" << d.t_ini
      << " Tf=" << d.t_f << " r=" << basis.cols() << '\n';
  const auto& data = basis.data();
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(data(i, j));
    }
    out << '\n';
  }
}

PartitionedMatrix<double> parse_basis(std::istream& in,
                                      const std::string& source) {
  std::string header;
  if (!std::getline(in, header)) fail(source, "empty basis file");
  std::istringstream hs(trim(header));
  std::string hash, tag;
  hs >> hash >> tag;
  if (hash != "#" || tag != "behave-basis")
    fail(location(source, 1), "missing '# behave-basis' header line");
  std::map<std::string, Eigen::Index> fields;
  std::string field;
  while (hs >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos)
      fail(location(source, 1), "malformed header field '" + field + "'");
    fields[field.substr(0, eq)] =
        parse_positive_index(field.substr(eq + 1), location(source, 1));
  }
  for (const char* key : {"m", "p", "Tini", "Tf", "r"})
    if (!fields.count(key))
      fail(location(source, 1), std::string("header lacks '") + key + "'");
  const BlockDims dims{fields["m"], fields["p"], fields["Tini"], fields["Tf"]};
  const auto r = fields["r"];

  Matrix<double> data(dims.rows(), r);
  Eigen::Index row = 0;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string content = trim(line);
    if (content.empty()) continue;
    const std::string where = location(source, line_no);
    if (row >= dims.rows())
      fail(where, "more than q = " + std::to_string(dims.rows()) + " rows");
    const auto cells = split_csv(content);
    if (static_cast<Eigen::Index>(cells.size()) != r)
      fail(where, "row has " + std::to_string(cells.size()) +
                      " entries, expected r = " + std::to_string(r));
    for (Eigen::Index j = 0; j < r; ++j)
      data(row, j) = parse_double(cells[static_cast<std::size_t>(j)], where);
    ++row;
  }
  if (row != dims.rows())
    fail(source, "basis has " + std::to_string(row) +
                     " rows, expected q = (m+p)(Tini+Tf) = " +
                     std::to_string(dims.rows()));
  return {std::move(data), dims};
}

PartitionedMatrix<double> read_basis_file(const std::string& path) {
  auto in = open_input(path);
  return parse_basis(in, path);
}

PredictionContext<double> parse_context(std::istream& in,
                                        const std::string& source,
                                        const BlockDims& dims) {
  std::map<std::string, std::vector<double>> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = location(source, line_no);
    const std::string content = trim(line.substr(0, line.find('#')));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) fail(where, "expected 'key = values'");
    const std::string key = trim(content.substr(0, eq));
    if (key != "u_ini" && key != "u" && key != "y_ini")
      fail(where, "unknown key '" + key + "' (expected u_ini, u, y_ini)");
    if (entries.count(key)) fail(where, "duplicate key '" + key + "'");
    entries[key] = parse_numbers(content.substr(eq + 1), where);
  }
  for (const char* key : {"u_ini", "u", "y_ini"})
    if (!entries.count(key))
      fail(source, std::string("missing key '") + key + "'");
  const auto to_vector = [](const std::vector<double>& v) {
    return Eigen::Map<const Vector<double>>(v.data(),
                                            static_cast<Eigen::Index>(v.size()))
        .eval();
  };
  try {
    return {to_vector(entries["u_ini"]), to_vector(entries["u"]),
            to_vector(entries["y_ini"]), dims};
  } catch (const InputError& e) {
    fail(source, e.what());
  }
}

PredictionContext<double> read_context_file(const std::string& path,
                                            const BlockDims& dims) {
  auto in = open_input(path);
  return parse_context(in, path, dims);
}

void write_context(std::ostream& out, const PredictionContext<double>& ctx) {
  const auto line = [&](const char* key, const Vector<double>& v) {
    out << key << " =";
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << format_double(v(i));
    out << '\n';
  };
  line("u_ini", ctx.u_ini());
  line("u", ctx.u_future());
  line("y_ini", ctx.y_ini());
}

}  // namespace behave::io
