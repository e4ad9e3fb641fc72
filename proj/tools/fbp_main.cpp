#include "fbp/cli/commands.hpp"

int main(int argc, char** argv) { return fbp::cli::run(argc, argv); }
