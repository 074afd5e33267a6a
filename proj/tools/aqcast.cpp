#include "commands.hpp"

int main(int argc, char** argv) { return aqcast::cli::run(argc, argv); }
