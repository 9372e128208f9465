#ifndef SVL_TOOLS_CLI_HPP_
#define SVL_TOOLS_CLI_HPP_

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace svl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

/// Runs `body`, mapping exceptions to exit codes and messages on `err`.
int guarded(const std::function<int()>& body, std::ostream& err);

/// Runs the command line `args` (without the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace svl::cli

#endif  // SVL_TOOLS_CLI_HPP_
