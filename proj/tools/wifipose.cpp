#include <iostream>

#include "wifipose/cli.hpp"

int main(int argc, char** argv) { return wifipose::cli::run(argc, argv, std::cout, std::cerr); }
