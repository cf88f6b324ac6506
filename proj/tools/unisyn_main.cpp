#include <iostream>

#include <torch/torch.h>

#include "unisyn/cli.hpp"

int main(int argc, char** argv) {
  torch::set_num_threads(1);
  std::vector<std::string> args(argv + 1, argv + argc);
  return unisyn::dispatch(args, std::cout, std::cerr).exit_code;
}
