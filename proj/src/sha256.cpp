#include "vmslim/sha256.hpp"

#include <openssl/sha.h>

namespace vmslim {

Sha256Digest sha256(const void* data, size_t n) {
    Sha256Digest out{};
    SHA256(static_cast<const unsigned char*>(data), n, out.data());
    return out;
}

Sha256Digest sha256(const std::vector<uint8_t>& data) {
    return sha256(data.data(), data.size());
}

std::string hex_digest(const Sha256Digest& d) {
    static const char* hex = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (uint8_t b : d) {
        s.push_back(hex[b >> 4]);
        s.push_back(hex[b & 0xF]);
    }
    return s;
}

} // namespace vmslim
