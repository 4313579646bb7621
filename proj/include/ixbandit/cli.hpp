#pragma once

// Entry point of the experiment harness, callable from tests with a
// synthesised argv. Exit codes: 0 on success, 1 on configuration errors
// (unreadable config, bad values, infeasible request), 2 on runtime
// invariant violations.
namespace ixbandit {

int cli_main(int argc, const char* const* argv);

}  // namespace ixbandit
