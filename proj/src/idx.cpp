#include "dgr/idx.hpp"

#include <fstream>

namespace dgr {

namespace {

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  std::uint8_t b[4] = {std::uint8_t(v >> 24), std::uint8_t(v >> 16),
                       std::uint8_t(v >> 8), std::uint8_t(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

IdxData read_idx(const std::filesystem::path& file, std::uint32_t expected_magic) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot open IDX file: " + file.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

  if (bytes.size() < 4)
    throw ParseError("truncated file: missing IDX magic in " + file.string(), bytes.size());
  std::uint32_t magic = read_be32(bytes.data());
  if (magic != expected_magic)
    throw ParseError("wrong magic in " + file.string() + ": expected " +
                         std::to_string(expected_magic) + ", got " + std::to_string(magic),
                     0);

  std::size_t ndims = magic & 0xff;
  std::size_t header = 4 + 4 * ndims;
  if (bytes.size() < header)
    throw ParseError("truncated file: incomplete IDX dims in " + file.string(), bytes.size());

  IdxData idx;
  std::size_t count = 1;
  for (std::size_t d = 0; d < ndims; ++d) {
    std::uint32_t v = read_be32(bytes.data() + 4 + 4 * d);
    idx.dims.push_back(v);
    count *= v;
  }
  if (bytes.size() < header + count)
    throw ParseError("truncated file: " + file.string() + " holds " +
                         std::to_string(bytes.size() - header) + " payload bytes, expected " +
                         std::to_string(count),
                     bytes.size());

  idx.data.assign(bytes.begin() + header, bytes.begin() + header + count);
  return idx;
}

void write_idx(const std::filesystem::path& file, std::uint32_t magic,
               const std::vector<std::uint32_t>& dims,
               const std::vector<std::uint8_t>& data) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write IDX file: " + file.string());
  write_be32(out, magic);
  for (auto d : dims) write_be32(out, d);
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
}

}  // namespace dgr
