#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace petident::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitFatal = 1,    // bad arguments, config, manifest or model
    kExitPartial = 2,  // some inputs failed, the rest were processed
};

/// Entry point of the `petident` tool. `args` excludes the program name.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace petident::cli
