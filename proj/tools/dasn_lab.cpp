#include "dasn/cli.hpp"

int main(int argc, char** argv) { return dasn::run_cli(argc, argv); }
