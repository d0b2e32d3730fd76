#pragma once

namespace lppi {

// Entry point behind the lppi binary. Parses argv, dispatches to the
// subcommand, and maps the error taxonomy onto exit codes: 0 success,
// 2 input or schema problems, 3 numeric degeneracy, 4 filesystem trouble.
int run_cli(int argc, const char* const* argv);

}  // namespace lppi
