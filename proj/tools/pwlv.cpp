#include "pwlv/cli.hpp"

int main(int argc, char** argv) { return pwlv::cli_main(argc, argv); }
