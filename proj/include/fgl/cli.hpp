#pragma once

#include <string>
#include <vector>

namespace fgl::cli {

// Entry point behind the `fgl` binary. Exit codes: 0 success, 1 contract or
// configuration error (including usage errors), 2 I/O or format error.
int dispatch(const std::vector<std::string>& args);
int dispatch(int argc, const char* const* argv);

}  // namespace fgl::cli
