#include <iostream>

#include "genius/app/cli.hpp"

int main(int argc, char** argv) { return genius::app::run(argc, argv, std::cout, std::cerr); }
