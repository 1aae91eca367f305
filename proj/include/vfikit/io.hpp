#pragma once

#include <cstddef>
#include <string>

#include "vfikit/image.hpp"

namespace vfikit {

// Middlebury .flo files: little-endian float32 202021.25 magic ("PIEH" on
// disk), int32 width, int32 height, then row-major interleaved (u,v) float32
// pairs. Round-trips are bit-exact.
FlowField read_flo(const std::string& path);
void write_flo(const FlowField& flow, const std::string& path);

// 8-bit image files. Image payloads hold floats in [0,1]; writers quantize
// with round(v*255), readers divide by 255, so rewriting a loaded file is
// byte-identical. read_image/write_image dispatch on the extension:
// .png, .ppm (3-channel), .pgm (1-channel).
Image read_image(const std::string& path);
void write_image(const Image& img, const std::string& path);

// Binary PNM: P6 for 3-channel, P5 for 1-channel, maxval 255.
Image read_pnm(const std::string& path);
void write_pnm(const Image& img, const std::string& path);
Image read_png(const std::string& path);
void write_png(const Image& img, const std::string& path);

// Occlusion maps ride on 1-channel images (0 -> black, 1 -> white).
OcclusionMap read_occlusion(const std::string& path);
void write_occlusion(const OcclusionMap& occ, const std::string& path);

// Middlebury color-wheel rendering, magnitude-normalized over the image;
// zero displacement maps to white.
Image flow_to_image(const FlowField& flow);

namespace detail {
// All writers go through write-temp-then-rename so a crash never leaves a
// partial file at the target path.
void atomic_write(const std::string& path, const void* bytes, std::size_t n);
}  // namespace detail

}  // namespace vfikit
