#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ujack/dataset.hpp"

namespace ujack::cli {

// Parses an X,Y table: header row required, then k feature columns followed
// by one response column, all numeric.  Throws runtime_error with
// "csv-parse: line L[, column C]: ..." diagnostics.
Dataset parse_xy_csv(const std::string& text, long long& k_out);

// Full command-line tool against explicit streams, argv[0] excluded.
// Exit codes: 0 success, 1 check/experiment failure, 2 usage/config error.
int run_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

}  // namespace ujack::cli
