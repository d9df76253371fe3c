#include <spn/cli.hpp>

int main(int argc, char** argv) { return spn::cli::run(argc, argv); }
