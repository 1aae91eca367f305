#include "vfikit/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "vfikit/errors.hpp"
#include "vfikit/io.hpp"

namespace vfikit {
namespace {

constexpr char kMagic[4] = {'V', 'F', 'C', 'K'};

void put_bytes(std::string& out, const void* p, std::size_t n) {
  out.append(static_cast<const char*>(p), n);
}
template <typename T>
void put(std::string& out, T v) {
  put_bytes(out, &v, sizeof(T));
}
void put_str(std::string& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}
void put_tensor(std::string& out, const Tensor& t) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.ndim()));
  for (std::int64_t d : t.shape()) put<std::int64_t>(out, d);
  put_bytes(out, t.data(), static_cast<std::size_t>(t.numel()) * sizeof(float));
}

struct Reader {
  const char* p;
  std::size_t left;
  std::string path;

  void take(void* dst, std::size_t n, const char* what) {
    if (n > left) {
      throw FormatError("checkpoint truncated reading " + std::string(what) + ": " + path);
    }
    std::memcpy(dst, p, n);
    p += n;
    left -= n;
  }
  template <typename T>
  T get(const char* what) {
    T v{};
    take(&v, sizeof(T), what);
    return v;
  }
  std::string get_str(const char* what) {
    const std::uint32_t n = get<std::uint32_t>(what);
    if (n > left) throw FormatError("checkpoint truncated reading " + std::string(what) + ": " + path);
    std::string s(p, n);
    p += n;
    left -= n;
    return s;
  }
  Tensor get_tensor(const char* what) {
    const std::uint32_t nd = get<std::uint32_t>(what);
    if (nd > 8) throw FormatError("implausible tensor rank in checkpoint: " + path);
    std::vector<std::int64_t> shape(nd);
    std::int64_t numel = 1;
    for (std::uint32_t i = 0; i < nd; ++i) {
      shape[i] = get<std::int64_t>(what);
      if (shape[i] <= 0 || shape[i] > (1 << 24)) {
        throw FormatError("implausible tensor dimension in checkpoint: " + path);
      }
      numel *= shape[i];
    }
    std::vector<float> data(static_cast<std::size_t>(numel));
    take(data.data(), data.size() * sizeof(float), what);
    return Tensor::from_vector(std::move(shape), std::move(data));
  }
};

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  if (ck.has_opt && (ck.opt_m.size() != ck.params.size() || ck.opt_v.size() != ck.params.size())) {
    throw ContractError("optimizer buffers must parallel the parameter list");
  }
  std::string out;
  put_bytes(out, kMagic, 4);
  put<std::uint32_t>(out, ck.version);
  put<std::int64_t>(out, ck.step);
  put_str(out, ck.config_json);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ck.params.size()));
  for (const auto& [name, t] : ck.params) {
    put_str(out, name);
    put_tensor(out, t);
  }
  put<std::uint8_t>(out, ck.has_opt ? 1 : 0);
  if (ck.has_opt) {
    put<std::int64_t>(out, ck.opt_step);
    for (std::size_t i = 0; i < ck.params.size(); ++i) {
      put_tensor(out, ck.opt_m[i]);
      put_tensor(out, ck.opt_v[i]);
    }
  }
  detail::atomic_write(path, out.data(), out.size());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (!in.good() && !in.eof()) throw IoError("read failed: " + path);

  Reader r{buf.data(), buf.size(), path};
  char magic[4];
  r.take(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad checkpoint magic: " + path);

  Checkpoint ck;
  ck.version = r.get<std::uint32_t>("version");
  if (ck.version != 1) {
    throw FormatError("unsupported checkpoint version " + std::to_string(ck.version) + ": " + path);
  }
  ck.step = r.get<std::int64_t>("step");
  ck.config_json = r.get_str("config");
  const std::uint32_t n = r.get<std::uint32_t>("param count");
  ck.params.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.get_str("param name");
    ck.params.emplace_back(std::move(name), r.get_tensor("param tensor"));
  }
  ck.has_opt = r.get<std::uint8_t>("optimizer flag") != 0;
  if (ck.has_opt) {
    ck.opt_step = r.get<std::int64_t>("optimizer step");
    ck.opt_m.reserve(n);
    ck.opt_v.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      ck.opt_m.push_back(r.get_tensor("adam m"));
      ck.opt_v.push_back(r.get_tensor("adam v"));
    }
  }
  if (r.left != 0) throw FormatError("trailing bytes in checkpoint: " + path);
  return ck;
}

}  // namespace vfikit
