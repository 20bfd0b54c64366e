// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return asymdial::run_cli(args, std::cout, std::cerr);
}
