#include "dqpt/cli.hpp"

int main(int argc, char** argv) { return dqpt::cli::run(argc, argv); }
