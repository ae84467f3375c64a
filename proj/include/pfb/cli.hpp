#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pfb {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

// `args` excludes the program name. Results go to `out`; errors go to `err`
// as one JSON object per line: {"error":<code>,"message":...}.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pfb
