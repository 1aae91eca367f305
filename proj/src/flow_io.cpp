#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vfikit/errors.hpp"
#include "vfikit/io.hpp"

namespace vfikit {

namespace detail {

void atomic_write(const std::string& path, const void* bytes, std::size_t n) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp);
    out.write(static_cast<const char*>(bytes), static_cast<std::streamsize>(n));
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + tmp + " -> " + path + " (" + ec.message() + ")");
}

}  // namespace detail

namespace {

constexpr float kFloMagic = 202021.25f;

std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  in.seekg(0, std::ios::end);
  const std::streamoff size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<char> buf(static_cast<std::size_t>(size));
  if (size > 0) in.read(buf.data(), size);
  if (!in) throw IoError("read failed: " + path);
  return buf;
}

}  // namespace

FlowField read_flo(const std::string& path) {
  const std::vector<char> buf = read_file(path);
  if (buf.size() < 12) throw FormatError("flo file truncated: " + path);
  float magic = 0.0f;
  std::int32_t w = 0, h = 0;
  std::memcpy(&magic, buf.data(), 4);
  std::memcpy(&w, buf.data() + 4, 4);
  std::memcpy(&h, buf.data() + 8, 4);
  if (magic != kFloMagic) throw FormatError("bad flo magic in " + path);
  if (w <= 0 || h <= 0 || w > 1 << 16 || h > 1 << 16) {
    throw FormatError("implausible flo dimensions " + std::to_string(w) + "x" +
                      std::to_string(h) + " in " + path);
  }
  const std::size_t payload = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 8;
  if (buf.size() != 12 + payload) {
    throw FormatError("flo payload size mismatch in " + path + ": expected " +
                      std::to_string(12 + payload) + " bytes, got " + std::to_string(buf.size()));
  }
  FlowField flow(static_cast<int>(w), static_cast<int>(h));
  std::memcpy(flow.data.data(), buf.data() + 12, payload);
  return flow;
}

void write_flo(const FlowField& flow, const std::string& path) {
  if (flow.width <= 0 || flow.height <= 0) throw ContractError("write_flo on empty flow");
  std::vector<char> buf(12 + flow.data.size() * 4);
  const std::int32_t w = flow.width, h = flow.height;
  std::memcpy(buf.data(), &kFloMagic, 4);
  std::memcpy(buf.data() + 4, &w, 4);
  std::memcpy(buf.data() + 8, &h, 4);
  std::memcpy(buf.data() + 12, flow.data.data(), flow.data.size() * 4);
  detail::atomic_write(path, buf.data(), buf.size());
}

}  // namespace vfikit
