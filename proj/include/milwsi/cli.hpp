#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace milwsi {

// Entry point of the milcli tool. Returns 0 on success, 1 on validation
// errors and 2 on I/O errors.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace milwsi
