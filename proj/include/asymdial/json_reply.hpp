// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <optional>
#include <string_view>

#include <nlohmann/json.hpp>

namespace asymdial {

// A model reply holding exactly one JSON value, optionally wrapped in a
// ``` or ```json fence. Anything else (prose around the value, two values)
// yields nullopt.
std::optional<nlohmann::json> parse_json_reply(std::string_view reply);

}  // namespace asymdial
