/* SPDX-License-Identifier: Apache-2.0 */
#include <iostream>
#include <string>
#include <vector>

#include "sgdiff/cli.hpp"

int main(int argc, char** argv) {
  sgdiff::tune_allocator();
  std::vector<std::string> args(argv + 1, argv + argc);
  return sgdiff::run_cli(args, std::cout, std::cerr);
}
