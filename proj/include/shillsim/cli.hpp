#pragma once

#include <iosfwd>

namespace shillsim {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kConfig = 2;
inline constexpr int kIo = 3;
inline constexpr int kDegenerate = 4;
inline constexpr int kInternal = 5;
}  // namespace exit_code

/// Entry point of the command-line tool. Parses `argv`, runs one
/// subcommand and maps library errors onto exit_code values.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace shillsim
