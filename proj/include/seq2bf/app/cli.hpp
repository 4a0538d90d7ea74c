#pragma once

#include <iosfwd>

namespace seq2bf::app {

/// Entry point of the `seq2bf` tool. Returns 0 on success, 1 on a runtime
/// failure and 2 on a usage error.
int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace seq2bf::app
