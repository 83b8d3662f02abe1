#include "fgl/cli.hpp"

int main(int argc, char** argv) { return fgl::cli::dispatch(argc, argv); }
