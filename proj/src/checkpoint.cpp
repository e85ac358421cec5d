#include "esp/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "esp/errors.hpp"

namespace esp {

namespace {

constexpr char kMagic[4] = {'E', 'S', 'P', 'C'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_f64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

}  // namespace

void save_checkpoint(const BlockNetwork& net, const std::string& path) {
  for (const auto& block : net.blocks) {
    if (block.layers.size() != 1) {
      throw ConfigError("save_checkpoint: format covers single-layer blocks only");
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("save_checkpoint: cannot open " + path);
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(net.input_width()));
  write_u32(out, static_cast<std::uint32_t>(net.block_count()));
  for (const auto& block : net.blocks) {
    write_u32(out, static_cast<std::uint32_t>(block.output_width()));
  }
  write_u32(out, static_cast<std::uint32_t>(net.class_count));
  for (double v : flatten_parameters(net)) write_f64(out, v);
  if (!out) throw ParseError("save_checkpoint: write failed for " + path);
}

BlockNetwork load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("load_checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError("load_checkpoint: bad magic in " + path);
  }
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw ParseError("load_checkpoint: unsupported version " + std::to_string(version));
  }
  const std::uint32_t input_width = read_u32(in);
  const std::uint32_t block_count = read_u32(in);
  std::vector<std::size_t> widths(block_count);
  for (auto& w : widths) w = read_u32(in);
  const std::uint32_t class_count = read_u32(in);
  if (!in) throw ParseError("load_checkpoint: truncated header in " + path);

  // Rebuild the architecture, then overwrite every parameter from the file.
  Rng scratch(0);
  BlockNetwork net = make_mlp(input_width, widths, class_count, scratch);
  std::vector<double> flat(param_total(net));
  for (double& v : flat) v = read_f64(in);
  if (!in) throw ParseError("load_checkpoint: truncated parameters in " + path);
  assign_parameters(net, flat);
  return net;
}

}  // namespace esp
