#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spikelds::csv {

// RFC 4180: fields containing comma, quote or newline are quoted, quotes
// doubled; rows end in LF. Numbers print as shortest round-trip decimals so
// outputs are byte-stable across runs.
std::string escape(const std::string& field);
std::string format_double(double v);

void write_row(std::ostream& os, const std::vector<std::string>& fields);

// One CSV row per matrix column (the time-series convention used throughout:
// column t is frame t).
void write_matrix(std::ostream& os, const std::vector<std::string>& header,
                  const Eigen::MatrixXd& m);

// Minimal reader: returns rows of fields, handling quoted fields and embedded
// newlines. Throws std::runtime_error on malformed quoting.
std::vector<std::vector<std::string>> read(std::istream& is);

} // namespace spikelds::csv
