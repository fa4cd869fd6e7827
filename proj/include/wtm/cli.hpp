#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wtm::cli {

enum ExitCode : int { kConverged = 0, kUsageError = 1, kNotConverged = 2, kDiverged = 3 };

/// Entry point behind the `wtm` executable; args excludes argv[0].
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wtm::cli
