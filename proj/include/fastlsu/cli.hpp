#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fastlsu::cli {

enum ExitCode : int {
    kOk = 0,
    kValidation = 2,
    kIo = 3,
    kInternal = 4,
};

// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fastlsu::cli
