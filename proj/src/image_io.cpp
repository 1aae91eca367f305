#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vfikit/errors.hpp"
#include "vfikit/io.hpp"

namespace vfikit {
namespace {

std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

std::string lower_ext(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

// PNM header tokens are separated by whitespace; '#' starts a comment that
// runs to end of line.
int pnm_token(std::istream& in, const std::string& path) {
  int c = in.get();
  while (c == '#' || std::isspace(c)) {
    if (c == '#') {
      while (c != '\n' && c != EOF) c = in.get();
    }
    c = in.get();
  }
  if (c == EOF) throw FormatError("pnm header truncated: " + path);
  int value = 0;
  bool any = false;
  while (std::isdigit(c)) {
    value = value * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw FormatError("pnm header expects a number: " + path);
  return value;
}

struct PngReadCtx {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngReadCtx() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

struct PngWriteCtx {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngWriteCtx() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

}  // namespace

Image read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  char p = 0, kind = 0;
  in.get(p);
  in.get(kind);
  if (p != 'P' || (kind != '5' && kind != '6')) {
    throw FormatError("not a binary pnm (P5/P6): " + path);
  }
  const int channels = kind == '6' ? 3 : 1;
  const int w = pnm_token(in, path);
  const int h = pnm_token(in, path);
  const int maxval = pnm_token(in, path);
  if (w <= 0 || h <= 0) throw FormatError("bad pnm dimensions in " + path);
  if (maxval != 255) throw FormatError("pnm maxval must be 255 in " + path);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h * channels);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw FormatError("pnm payload truncated: " + path);
  }
  Image img(w, h, channels);
  for (std::size_t i = 0; i < bytes.size(); ++i) img.data[i] = bytes[i] / 255.0f;
  return img;
}

void write_pnm(const Image& img, const std::string& path) {
  if (img.empty()) throw ContractError("write_pnm on empty image");
  if (img.channels != 1 && img.channels != 3) {
    throw ContractError("pnm supports 1 or 3 channels, got " + std::to_string(img.channels));
  }
  std::string out;
  out += img.channels == 3 ? "P6\n" : "P5\n";
  out += std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out[header + i] = static_cast<char>(quantize(img.data[i]));
  }
  detail::atomic_write(path, out.data(), out.size());
}

Image read_png(const std::string& path) {
  PngReadCtx ctx;
  ctx.fp = std::fopen(path.c_str(), "rb");
  if (!ctx.fp) throw IoError("cannot open: " + path);
  png_byte header[8];
  if (std::fread(header, 1, 8, ctx.fp) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    throw FormatError("not a png: " + path);
  }
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!ctx.png) throw IoError("libpng init failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw IoError("libpng init failed");
  if (setjmp(png_jmpbuf(ctx.png))) throw FormatError("png decode failed: " + path);
  png_init_io(ctx.png, ctx.fp);
  png_set_sig_bytes(ctx.png, 8);
  png_read_info(ctx.png, ctx.info);

  const png_uint_32 w = png_get_image_width(ctx.png, ctx.info);
  const png_uint_32 h = png_get_image_height(ctx.png, ctx.info);
  const png_byte color = png_get_color_type(ctx.png, ctx.info);
  const png_byte depth = png_get_bit_depth(ctx.png, ctx.info);

  if (depth == 16) png_set_strip_16(ctx.png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
  if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(ctx.png);
  png_read_update_info(ctx.png, ctx.info);

  const int channels = static_cast<int>(png_get_channels(ctx.png, ctx.info));
  if (channels != 1 && channels != 3) throw FormatError("unsupported png channel layout: " + path);

  std::vector<std::uint8_t> rowbuf(static_cast<std::size_t>(w) * h * channels);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) {
    rows[y] = rowbuf.data() + static_cast<std::size_t>(y) * w * channels;
  }
  png_read_image(ctx.png, rows.data());
  png_read_end(ctx.png, nullptr);

  Image img(static_cast<int>(w), static_cast<int>(h), channels);
  for (std::size_t i = 0; i < rowbuf.size(); ++i) img.data[i] = rowbuf[i] / 255.0f;
  return img;
}

void write_png(const Image& img, const std::string& path) {
  if (img.empty()) throw ContractError("write_png on empty image");
  if (img.channels != 1 && img.channels != 3) {
    throw ContractError("png writer supports 1 or 3 channels, got " +
                        std::to_string(img.channels));
  }
  const std::string tmp = path + ".tmp";
  {
    PngWriteCtx ctx;
    ctx.fp = std::fopen(tmp.c_str(), "wb");
    if (!ctx.fp) throw IoError("cannot open for writing: " + tmp);
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw IoError("libpng init failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw IoError("libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw IoError("png encode failed: " + tmp);
    png_init_io(ctx.png, ctx.fp);
    png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);

    std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        for (int c = 0; c < img.channels; ++c) {
          row[static_cast<std::size_t>(x) * img.channels + c] = quantize(img.at(y, x, c));
        }
      }
      png_write_row(ctx.png, row.data());
    }
    png_write_end(ctx.png, nullptr);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + tmp + " -> " + path + " (" + ec.message() + ")");
}

Image read_image(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return read_pnm(path);
  throw FormatError("unsupported image extension '" + ext + "': " + path);
}

void write_image(const Image& img, const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") {
    write_png(img, path);
  } else if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
    write_pnm(img, path);
  } else {
    throw FormatError("unsupported image extension '" + ext + "': " + path);
  }
}

OcclusionMap read_occlusion(const std::string& path) {
  const Image img = read_image(path);
  if (img.channels != 1) throw FormatError("occlusion map must be 1-channel: " + path);
  OcclusionMap occ(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    occ.data[i] = img.data[i] >= 0.5f ? 1.0f : 0.0f;
  }
  return occ;
}

void write_occlusion(const OcclusionMap& occ, const std::string& path) {
  Image img(occ.width, occ.height, 1);
  for (std::size_t i = 0; i < occ.data.size(); ++i) {
    img.data[i] = occ.data[i] >= 0.5f ? 1.0f : 0.0f;
  }
  write_image(img, path);
}

}  // namespace vfikit
