#pragma once

#include <string>
#include <string_view>

namespace selfdetect {

// SHA-256 digest as a lowercase hex string. Used for cache keys, prompt
// hashes, and manifest hashes; stable across platforms and runs.
std::string sha256_hex(std::string_view data);

}  // namespace selfdetect
