#include "cgflow/latent_io.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace cgflow {
namespace {

constexpr char kMagic[4] = {'C', 'G', 'F', 'L'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
  buf.push_back(static_cast<char>((v >> 16) & 0xff));
  buf.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& buf, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(buf, bits);
}

std::uint32_t get_u32(const std::string& buf, std::size_t& pos) {
  std::uint32_t v = (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos]))) |
                    (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + 1])) << 8) |
                    (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + 2])) << 16) |
                    (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + 3])) << 24);
  pos += 4;
  return v;
}

float get_f32(const std::string& buf, std::size_t& pos) {
  std::uint32_t bits = get_u32(buf, pos);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(cat("cannot open ", path));
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  return buf;
}

void write_file(const std::string& path, const std::string& buf) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError(cat("cannot write ", path));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw ConfigError(cat("short write to ", path));
}

Latent load_impl(const std::string& path, bool require_finite_entries) {
  const std::string buf = read_file(path);
  if (buf.size() < 24 || std::memcmp(buf.data(), kMagic, 4) != 0)
    throw ConfigError(cat(path, ": not a latent container"));
  std::size_t pos = 4;
  const std::uint32_t version = get_u32(buf, pos);
  if (version != kVersion)
    throw ConfigError(cat(path, ": unsupported container version ", version));
  const std::uint32_t f = get_u32(buf, pos);
  const std::uint32_t h = get_u32(buf, pos);
  const std::uint32_t w = get_u32(buf, pos);
  const std::uint32_t c = get_u32(buf, pos);
  if (f == 0 || h == 0 || w == 0 || c == 0)
    throw ConfigError(cat(path, ": zero dimension in header"));
  const std::size_t count = static_cast<std::size_t>(f) * h * w * c;
  if (buf.size() != 24 + count * 4)
    throw ConfigError(cat(path, ": payload size mismatch (", buf.size(), " bytes for ",
                          count, " values)"));
  Latent z(static_cast<int>(f), static_cast<int>(h), static_cast<int>(w),
           static_cast<int>(c));
  for (std::size_t i = 0; i < count; ++i) z.data[i] = get_f32(buf, pos);
  if (require_finite_entries && !z.all_finite())
    throw ConfigError(cat(path, ": non-finite latent entries"));
  return z;
}

}  // namespace

void save_latent(const std::string& path, const Latent& z) {
  if (z.size() == 0) throw ConfigError("refusing to save empty latent");
  std::string buf;
  buf.reserve(24 + z.size() * 4);
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);
  put_u32(buf, static_cast<std::uint32_t>(z.frames));
  put_u32(buf, static_cast<std::uint32_t>(z.height));
  put_u32(buf, static_cast<std::uint32_t>(z.width));
  put_u32(buf, static_cast<std::uint32_t>(z.channels));
  for (double v : z.data) put_f32(buf, static_cast<float>(v));
  write_file(path, buf);
}

Latent load_latent(const std::string& path) { return load_impl(path, true); }

Latent load_plane_raw(const std::string& path) { return load_impl(path, false); }

void save_mask(const std::string& path, const VideoMask& m) {
  Latent z(m.frames, m.height, m.width, 1);
  for (std::size_t i = 0; i < m.size(); ++i) z.data[i] = m.data[i] ? 1.0 : 0.0;
  save_latent(path, z);
}

VideoMask load_mask(const std::string& path) {
  Latent z = load_impl(path, true);
  if (z.channels != 1)
    throw ConfigError(cat(path, ": mask container must have 1 channel, got ",
                          z.channels));
  VideoMask m(z.frames, z.height, z.width);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (z.data[i] == 0.0)
      m.data[i] = 0;
    else if (z.data[i] == 1.0)
      m.data[i] = 1;
    else
      throw ConfigError(cat(path, ": mask entry ", z.data[i], " not in {0, 1}"));
  }
  return m;
}

}  // namespace cgflow
