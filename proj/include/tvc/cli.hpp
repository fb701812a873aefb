#pragma once

namespace tvc::cli {

// Entry point of the tvc command-line tool. Exit codes: 0 success,
// 1 validation failure, 2 usage or configuration error.
int run(int argc, const char* const* argv);

}  // namespace tvc::cli
