#pragma once

#include "vqcnir/gradcheck.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace vqcnir::cli {

enum ExitCode : int {
    kOk = 0,
    kVerificationFailure = 1,
    kUsageError = 2,
    kIoError = 3,
};

struct Hooks {
    /// Appended to the standard gradcheck suite (used by mutation tests).
    std::vector<GradcheckCase> extra_gradcheck_cases;
};

/// Runs one command line (without the program name) and returns its exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const Hooks& hooks = {});

} // namespace vqcnir::cli
