#include "projclust/commands.hpp"

int main(int argc, char** argv) { return projclust::run_cli(argc, argv); }
