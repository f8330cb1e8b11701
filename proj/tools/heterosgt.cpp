#include <heterosgt/cli.hpp>

int main(int argc, char** argv) { return heterosgt::cli::run_command(argc, argv); }
