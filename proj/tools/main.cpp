#include "lemda/cli.hpp"

int main(int argc, char** argv) { return lemda::run_command(argc, argv); }
