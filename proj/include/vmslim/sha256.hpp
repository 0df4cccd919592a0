#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace vmslim {

using Sha256Digest = std::array<uint8_t, 32>;

Sha256Digest sha256(const void* data, size_t n);
Sha256Digest sha256(const std::vector<uint8_t>& data);

std::string hex_digest(const Sha256Digest& d);

} // namespace vmslim
