#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace seqbias::cli {

enum ExitCode : int {
    kOk = 0,
    kIoOrParse = 1,
    kPrecondition = 2,
    kScientificFailure = 3,
};

// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace seqbias::cli
