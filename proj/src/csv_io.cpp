#include "wh/csv_io.hpp"

#include "wh/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string_view>

namespace wh {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

bool is_blank(const std::string& line) { return trim(line).empty(); }

InvalidArgument line_error(std::size_t line_no, const std::string& what) {
  return InvalidArgument("line " + std::to_string(line_no) + ": " + what);
}

int parse_int_cell(const std::string& field, std::size_t line_no) {
  const double v = parse_double(field, line_no);
  if (v != std::floor(v)) throw line_error(line_no, "grid coordinate '" + field + "' is not an integer");
  return static_cast<int>(v);
}

} // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& field, std::size_t line_no) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto res = std::from_chars(first, last, v);
  if (field.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
    throw line_error(line_no, "cannot parse number '" + field + "'");
  return v;
}

std::vector<PortfolioRecord> read_records(std::istream& in, int* dim_out) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!is_blank(line)) break;
  }
  if (is_blank(line)) {
    if (dim_out) *dim_out = 0;
    return {};
  }
  const auto header = split_csv_line(line);
  int dim = 0;
  if (header == std::vector<std::string>{"x", "t", "delta"})
    dim = 1;
  else if (header == std::vector<std::string>{"x", "z", "t", "delta"})
    dim = 2;
  else
    throw line_error(line_no, "expected header 'x,t,delta' or 'x,z,t,delta'");
  if (dim_out) *dim_out = dim;

  std::vector<PortfolioRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size())
      throw line_error(line_no, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    PortfolioRecord r;
    r.x = parse_double(f[0], line_no);
    if (dim == 2) r.z = parse_double(f[1], line_no);
    r.t = parse_double(f[dim], line_no);
    const double delta = parse_double(f[dim + 1], line_no);
    if (!(r.t > 0.0)) throw line_error(line_no, "duration t must be > 0");
    if (delta != 0.0 && delta != 1.0) throw line_error(line_no, "delta must be 0 or 1");
    r.delta = static_cast<int>(delta);
    records.push_back(r);
  }
  return records;
}

void write_records(std::ostream& out, const std::vector<PortfolioRecord>& records, int dim) {
  out << (dim == 2 ? "x,z,t,delta\n" : "x,t,delta\n");
  for (const auto& r : records) {
    out << format_double(r.x) << ',';
    if (dim == 2) out << format_double(r.z.value_or(0.0)) << ',';
    out << format_double(r.t) << ',' << r.delta << '\n';
  }
}

void write_aggregates(std::ostream& out, const AggregatedExposure& agg) {
  out << (agg.dim() == 2 ? "x,z,d,ec\n" : "x,d,ec\n");
  for (int j = 0; j < agg.nz(); ++j) {
    for (int i = 0; i < agg.nx(); ++i) {
      const int k = j * agg.nx() + i;
      out << agg.x.lo + i << ',';
      if (agg.dim() == 2) out << agg.z->lo + j << ',';
      out << format_double(agg.d(k)) << ',' << format_double(agg.ec(k)) << '\n';
    }
  }
}

AggregatedExposure read_aggregates(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!is_blank(line)) break;
  }
  if (is_blank(line)) throw InvalidArgument("aggregate file is empty");
  const auto header = split_csv_line(line);
  int dim = 0;
  if (header.size() >= 3 && header[0] == "x" && header[1] == "d" && header[2] == "ec")
    dim = 1;
  else if (header.size() >= 4 && header[0] == "x" && header[1] == "z" && header[2] == "d" && header[3] == "ec")
    dim = 2;
  else
    throw line_error(line_no, "expected header 'x,d,ec' or 'x,z,d,ec'");

  struct Row {
    int x, z;
    double d, ec;
    std::size_t line_no;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size())
      throw line_error(line_no, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    Row r{parse_int_cell(f[0], line_no), dim == 2 ? parse_int_cell(f[1], line_no) : 0,
          parse_double(f[dim], line_no), parse_double(f[dim + 1], line_no), line_no};
    if (r.d < 0.0 || r.d != std::floor(r.d)) throw line_error(line_no, "d must be a nonnegative integer");
    if (r.ec < 0.0) throw line_error(line_no, "ec must be nonnegative");
    rows.push_back(r);
  }
  if (rows.empty()) throw InvalidArgument("aggregate file has no data rows");

  auto [xmin, xmax] = std::minmax_element(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.x < b.x; });
  auto [zmin, zmax] = std::minmax_element(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.z < b.z; });
  AggregatedExposure agg = dim == 2 ? AggregatedExposure::zeros({xmin->x, xmax->x}, AxisRange{zmin->z, zmax->z})
                                    : AggregatedExposure::zeros({xmin->x, xmax->x});
  if (static_cast<int>(rows.size()) != agg.size())
    throw InvalidArgument("aggregate rows do not form a complete regular grid (" + std::to_string(rows.size()) +
                          " rows for " + std::to_string(agg.size()) + " cells)");
  std::vector<bool> seen(agg.size(), false);
  for (const auto& r : rows) {
    const int k = (r.z - (agg.z ? agg.z->lo : 0)) * agg.nx() + (r.x - agg.x.lo);
    if (seen[k]) throw line_error(r.line_no, "duplicate grid cell");
    seen[k] = true;
    agg.d(k) = r.d;
    agg.ec(k) = r.ec;
  }
  return agg;
}

} // namespace wh
