#pragma once

#include <string>

namespace qdtl {

std::string sha256_hex(const std::string& data);

}  // namespace qdtl
