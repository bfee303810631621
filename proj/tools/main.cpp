#include "lanpaint/cli.hpp"

int main(int argc, char** argv) { return lanpaint::cli::run(argc, argv); }
