#include "dai/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "dai/error.hpp"

namespace dai {

namespace {

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffULL) << (8 * (7 - i));
  return r;
}

void put_u64(std::string& out, std::uint64_t v) {
  v = to_little(v);
  char bytes[8];
  std::memcpy(bytes, &v, 8);
  out.append(bytes, 8);
}

std::uint64_t get_u64(const char* p) {
  std::uint64_t v;
  std::memcpy(&v, p, 8);
  return to_little(v);
}

}  // namespace

void write_container(const std::string& path, std::string_view magic, const nlohmann::json& header,
                     std::span<const double> payload) {
  if (magic.size() != 8) throw ContractViolation("container magic must be 8 bytes");
  const std::string text = header.dump();
  std::string bytes;
  bytes.reserve(16 + text.size() + payload.size() * 8);
  bytes.append(magic);
  put_u64(bytes, text.size());
  bytes.append(text);
  for (double d : payload) put_u64(bytes, std::bit_cast<std::uint64_t>(d));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

BinaryContainer read_container(const std::string& path, std::string_view magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (bytes.size() < 8 || std::string_view(bytes.data(), 8) != magic)
    throw FormatError("'" + path + "': incompatible file (expected magic " + std::string(magic) + ")");
  if (bytes.size() < 16) throw FormatError("'" + path + "': corrupt file, truncated header length");
  const std::uint64_t header_len = get_u64(bytes.data() + 8);
  if (header_len > bytes.size() - 16)
    throw FormatError("'" + path + "': corrupt file, truncated header");
  BinaryContainer c;
  try {
    c.header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path + "': corrupt JSON header: " + e.what());
  }
  const std::size_t body = bytes.size() - 16 - header_len;
  if (body % 8 != 0) throw FormatError("'" + path + "': corrupt file, payload is not whole doubles");
  c.payload.resize(body / 8);
  const char* p = bytes.data() + 16 + header_len;
  for (std::size_t i = 0; i < c.payload.size(); ++i)
    c.payload[i] = std::bit_cast<double>(get_u64(p + 8 * i));
  return c;
}

}  // namespace dai
