#include "tasksim/cli.hpp"

int main(int argc, char** argv) { return tasksim::cli::run_cli(argc, argv); }
