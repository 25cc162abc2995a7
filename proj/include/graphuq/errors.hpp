#pragma once

// Error categories shared across the library and the CLI.  The CLI maps them
// onto process exit codes: usage problems (std::invalid_argument and friends)
// exit 1, NumericalError 2, IoError 3.

#include <stdexcept>
#include <string>

namespace graphuq {

// Non-finite losses, diverged training, invalid numeric state discovered at
// run time (as opposed to malformed arguments).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Missing, unreadable, unwritable, or malformed files and directories.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace graphuq
