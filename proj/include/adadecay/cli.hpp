#pragma once

namespace adadecay {

// Entry point behind the command-line tool. Subcommands: train, compare,
// sweep, gradcheck. Returns 0 on success, 1 on usage/config errors, 2 on
// runtime errors.
int cli_main(int argc, const char* const* argv);

}  // namespace adadecay
