#pragma once

#include <array>
#include <string>
#include <vector>

#include "vfikit/synth.hpp"

namespace vfikit {

// One manifest row. The on-disk manifest is line-oriented UTF-8, one quad per
// line, '#' comments, fields whitespace-separated in this order:
//   t  frame[-1] frame[0] frame[1] frame[2]  gt  fwd0 fwd1 fwd2
//   bwd0 bwd1 bwd2  occf0 occf1 occf2  occb0 occb1 occb2
// Pair index 0 is (-1,0), 1 is (0,1), 2 is (1,2); fwd runs earlier->later.
// The gt field may be "-" when no reference frame exists (stored empty here).
// Paths are resolved against the manifest's directory unless absolute.
struct QuadRecord {
  float t = 0.5f;
  std::array<std::string, 4> frames;
  std::string gt_frame;
  std::array<std::string, 3> flow_fwd, flow_bwd, occ_fwd, occ_bwd;
};

std::vector<QuadRecord> read_manifest(const std::string& path);
void write_manifest(const std::vector<QuadRecord>& records, const std::string& path);

// Loads every raster the record references. IoError names the missing path;
// DimensionError when raster sizes disagree. The result is marked as
// file-based, so coefficient-oracle mode refuses it.
Quad load_quad(const QuadRecord& rec, const std::string& base_dir);

// Writes the quad's rasters under dir as <stem>_*.{ppm,pgm,flo} and returns
// the matching record with paths relative to dir.
QuadRecord save_quad(const Quad& q, const std::string& dir, const std::string& stem);

}  // namespace vfikit
