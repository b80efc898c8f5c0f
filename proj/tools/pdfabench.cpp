#include "pdfabench/cli.hpp"

int main(int argc, char** argv) { return pdfabench::cli::main(argc, argv); }
