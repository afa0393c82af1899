#pragma once

#include <iosfwd>

namespace mgl {

// Exit codes: 0 success, 1 domain failure, 2 usage or I/O failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mgl
