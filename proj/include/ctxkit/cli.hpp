#pragma once

// Command-line front end. dispatch() is the whole CLI as a library function
// so tests can drive it in-process; the binary is a thin wrapper around it.
// Exit codes: 0 success, 1 domain failure (disturbing behavior, failed check,
// bad file contents), 2 usage error.

#include <ostream>
#include <string>
#include <vector>

namespace ctxkit {

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ctxkit
