// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "eqprop/cli.hpp"

int main(int argc, char **argv) { return eqprop::run_command(argc, argv, std::cout, std::cerr); }
