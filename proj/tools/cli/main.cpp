#include "commands.hpp"

int main(int argc, char** argv) { return optinet::cli::run_main(argc, argv); }
