// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace asymdial {

// Exit status: 0 success, 1 validation failure or bad usage, 2 runtime
// failure. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace asymdial
