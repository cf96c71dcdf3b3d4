#pragma once

#include <iostream>

namespace compbias {

// Returns the process exit code: 0 success, 1 runtime failure, 2 bad arguments.
int cli_main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace compbias
