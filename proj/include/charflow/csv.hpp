#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace charflow::csv {

// Shortest representation that round-trips to the same double; -0 is written as 0.
std::string format(double value);

void write_row(std::ostream& os, const std::vector<std::string>& cells);

}  // namespace charflow::csv
