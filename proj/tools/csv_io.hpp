#pragma once

#include <string>
#include <vector>

#include "tflab/packets.hpp"
#include "tflab/sampling.hpp"

namespace tflab::cli {

// Numeric CSV: comma separated, '#' comments, blank lines skipped, one
// optional non-numeric header line. Every row must have the same width.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

[[nodiscard]] Table read_table(const std::string& path);

// Columns x, then one (real) or two (re, im) value columns per function.
// x must be uniform; the grid is [x_0, x_0 + n h) and n a power of two.
[[nodiscard]] std::vector<GridFunction> read_signals(const std::string& path, int count);

// Rows lo, hi, xi.
[[nodiscard]] std::vector<TopDatum> read_tops(const std::string& path);

// x, then re, im per function; "-" writes to stdout.
void write_signals(const std::string& path, const std::vector<std::string>& names,
                   const std::vector<GridFunction>& fs);

}  // namespace tflab::cli
