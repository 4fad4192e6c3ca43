#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "ultra/error.hpp"

namespace ultra {

// Exit statuses shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitInput = 2,
  kExitLookup = 3,
  kExitNumeric = 4,
};

int exit_code_for(ErrorCode code);

// Entry point of the `ukge` tool; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ultra
