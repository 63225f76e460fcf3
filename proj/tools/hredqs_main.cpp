#include "hred/cli.hpp"

int main(int argc, char** argv) { return hred::run(argc, argv); }
