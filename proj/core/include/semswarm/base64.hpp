#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace semswarm {

std::string base64_encode(std::span<const std::uint8_t> bytes);

/// Standard alphabet with padding; nullopt on malformed input.
std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view text);

}  // namespace semswarm
