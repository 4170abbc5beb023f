#include "hkvf/cli.hpp"

int main(int argc, char** argv) { return hkvf::cli::run(argc, argv); }
