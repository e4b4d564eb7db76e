#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace locaug {

// SHA-1 of "blob <size>\0" + content, hex encoded (what `git hash-object` prints).
std::string git_blob_hash(std::span<const std::uint8_t> content);

}  // namespace locaug
