#include "bsnn/cli.hpp"

int main(int argc, char** argv) { return bsnn::cli_dispatch(argc, argv); }
