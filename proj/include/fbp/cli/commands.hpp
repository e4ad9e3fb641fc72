#pragma once

namespace fbp::cli {

// Entry point of the `fbp` tool. Returns the process exit status: 0 on
// success, 1 on a runtime failure, 2 on a configuration or usage error.
int run(int argc, char** argv);

}  // namespace fbp::cli
