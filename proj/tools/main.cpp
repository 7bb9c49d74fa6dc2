#include "sparse_svm/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return sparse_svm::cli::run(argc, argv, std::cout, std::cerr); }
