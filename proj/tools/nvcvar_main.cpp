#include "nvcvar/cli.hpp"

int main(int argc, char** argv) { return nvcvar::cli::run(argc, argv); }
