#include "modcp/cli.hpp"

int main(int argc, char** argv) { return modcp::run(argc, argv); }
