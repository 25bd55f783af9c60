#include "eva/cli.hpp"

int main(int argc, char** argv) { return eva::cli(argc, argv); }
