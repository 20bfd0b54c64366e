// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#include "asymdial/json_reply.hpp"

#include "asymdial/config.hpp"

namespace asymdial {

std::optional<nlohmann::json> parse_json_reply(std::string_view reply) {
  std::string body = trim(reply);
  if (body.starts_with("```")) {
    const auto first_newline = body.find('\n');
    if (first_newline == std::string::npos || !body.ends_with("```") || body.size() < 6) {
      return std::nullopt;
    }
    const std::string tag = trim(std::string_view(body).substr(3, first_newline - 3));
    if (!tag.empty() && tag != "json" && tag != "JSON") return std::nullopt;
    body = trim(std::string_view(body).substr(first_newline + 1,
                                              body.size() - 3 - (first_newline + 1)));
  }
  if (body.empty()) return std::nullopt;
  auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded()) return std::nullopt;
  return doc;
}

}  // namespace asymdial
