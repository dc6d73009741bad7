#pragma once

#include <ostream>

namespace lexrag {

/// Runs one lexrag command. Returns 0 on success, 2 on usage errors and 1
/// when the command fails; failures print {"error": {...}} to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace lexrag
