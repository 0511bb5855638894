#include "cli.hpp"

int main(int argc, char** argv) { return liketrack::cli_main(argc, argv); }
