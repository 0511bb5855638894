#pragma once

#include <iosfwd>

namespace liketrack {

// Exit codes: 0 success, 1 usage error, 2 data error.
int cli_main(int argc, const char* const* argv);
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace liketrack
