#include <opal/cli.hpp>

int main(int argc, char** argv) { return opal::cli::run(argc, argv); }
