#pragma once

namespace pwlv {

// Exit codes: 0 robust / success, 1 counterexample found, 2 input error,
// 3 inconclusive (limits hit), 4 size guard exceeded.
int cli_main(int argc, char** argv);

}  // namespace pwlv
