#include "commands.hpp"

int main(int argc, char** argv) { return depiabs::cli::main(argc, argv); }
