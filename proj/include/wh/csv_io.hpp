#ifndef WH_CSV_IO_HPP
#define WH_CSV_IO_HPP

#include "wh/duration.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace wh {

// Shortest-safe round-trip rendering: 17 significant digits.
std::string format_double(double v);

// Splits a CSV line on commas; trims surrounding whitespace and a trailing '\r'.
std::vector<std::string> split_csv_line(const std::string& line);

// Parses a finite double; throws InvalidArgument naming `line_no` otherwise.
double parse_double(const std::string& field, std::size_t line_no);

// Individual records. Header `x,t,delta` (1D) or `x,z,t,delta` (2D).
std::vector<PortfolioRecord> read_records(std::istream& in, int* dim_out = nullptr);
void write_records(std::ostream& out, const std::vector<PortfolioRecord>& records, int dim);

// Aggregates. Header `x,d,ec` (1D) or `x,z,d,ec` (2D), rows in vectorization order.
void write_aggregates(std::ostream& out, const AggregatedExposure& agg);
AggregatedExposure read_aggregates(std::istream& in);

} // namespace wh

#endif
