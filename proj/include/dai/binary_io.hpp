#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dai {

/// Container shared by checkpoints, demo and trajectory files:
///   8 magic bytes | u64 LE header length | UTF-8 JSON header | f64 LE payload
struct BinaryContainer {
  nlohmann::json header;
  std::vector<double> payload;
};

void write_container(const std::string& path, std::string_view magic, const nlohmann::json& header,
                     std::span<const double> payload);

/// Throws FormatError for a wrong magic or a truncated file, IoError when the
/// file cannot be opened.
BinaryContainer read_container(const std::string& path, std::string_view magic);

}  // namespace dai
