#include "fracldp/cli.hpp"

int main(int argc, char** argv) { return fracldp::cli_main(argc, argv); }
