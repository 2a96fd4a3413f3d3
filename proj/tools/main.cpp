#include "lpp/cli.hpp"

int main(int argc, char** argv) { return lpp::cli_main(argc, argv); }
