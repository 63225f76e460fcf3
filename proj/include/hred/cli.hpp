#pragma once

#include <string>
#include <vector>

// Command-line surface: preprocess | vocab | train | suggest | rescore |
// eval | dump-embeddings | dump-gates. Exit codes: 0 success, 1 usage error,
// 2 data or contract error.

namespace hred {

int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args without the program name

}  // namespace hred
