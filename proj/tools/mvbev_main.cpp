#include "mvbev/cli.hpp"

int main(int argc, char** argv) { return mvbev::run_cli(argc, argv); }
