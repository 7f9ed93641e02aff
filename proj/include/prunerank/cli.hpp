#pragma once

namespace prunerank {

// Parses argv and runs one subcommand. Returns the process exit code:
// 0 success, 1 usage or data errors, 2 remote backend failures.
int cli_dispatch(int argc, char** argv);

}  // namespace prunerank
