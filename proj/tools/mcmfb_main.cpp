#include "mcmfb/cli.hpp"

int main(int argc, char** argv) { return mcmfb::cli::dispatch(argc, argv); }
