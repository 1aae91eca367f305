#include "vfikit/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "vfikit/errors.hpp"
#include "vfikit/io.hpp"

namespace vfikit {
namespace {

std::string resolve(const std::string& base_dir, const std::string& rel) {
  std::filesystem::path p(rel);
  if (p.is_absolute() || base_dir.empty()) return rel;
  return (std::filesystem::path(base_dir) / p).string();
}

void check_size(int w, int h, int qw, int qh, const std::string& path) {
  if (w != qw || h != qh) {
    throw DimensionError("raster size " + std::to_string(w) + "x" + std::to_string(h) +
                         " does not match quad " + std::to_string(qw) + "x" +
                         std::to_string(qh) + ": " + path);
  }
}

}  // namespace

std::vector<QuadRecord> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<QuadRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    QuadRecord rec;
    std::vector<std::string> tok;
    std::string t;
    while (ls >> t) tok.push_back(t);
    if (tok.size() != 18) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected 18 fields, got " +
                        std::to_string(tok.size()));
    }
    try {
      rec.t = std::stof(tok[0]);
    } catch (...) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": bad t value '" + tok[0] + "'");
    }
    if (!(rec.t > 0.0f && rec.t < 1.0f)) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": t must be in (0,1), got " +
                        tok[0]);
    }
    for (int i = 0; i < 4; ++i) rec.frames[static_cast<std::size_t>(i)] = tok[static_cast<std::size_t>(1 + i)];
    rec.gt_frame = tok[5] == "-" ? std::string() : tok[5];
    for (int i = 0; i < 3; ++i) {
      rec.flow_fwd[static_cast<std::size_t>(i)] = tok[static_cast<std::size_t>(6 + i)];
      rec.flow_bwd[static_cast<std::size_t>(i)] = tok[static_cast<std::size_t>(9 + i)];
      rec.occ_fwd[static_cast<std::size_t>(i)] = tok[static_cast<std::size_t>(12 + i)];
      rec.occ_bwd[static_cast<std::size_t>(i)] = tok[static_cast<std::size_t>(15 + i)];
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_manifest(const std::vector<QuadRecord>& records, const std::string& path) {
  std::ostringstream out;
  out << "# vfikit quad manifest\n"
      << "# t frame[-1] frame[0] frame[1] frame[2] gt fwd0 fwd1 fwd2"
         " bwd0 bwd1 bwd2 occf0 occf1 occf2 occb0 occb1 occb2\n";
  for (const QuadRecord& r : records) {
    out << r.t;
    for (const std::string& f : r.frames) out << ' ' << f;
    out << ' ' << (r.gt_frame.empty() ? "-" : r.gt_frame);
    for (const std::string& f : r.flow_fwd) out << ' ' << f;
    for (const std::string& f : r.flow_bwd) out << ' ' << f;
    for (const std::string& f : r.occ_fwd) out << ' ' << f;
    for (const std::string& f : r.occ_bwd) out << ' ' << f;
    out << '\n';
  }
  const std::string s = out.str();
  detail::atomic_write(path, s.data(), s.size());
}

Quad load_quad(const QuadRecord& rec, const std::string& base_dir) {
  Quad q;
  q.t = rec.t;
  q.synthetic = false;
  q.has_gt_coeffs = false;
  for (int i = 0; i < 4; ++i) {
    q.frames[i] = read_image(resolve(base_dir, rec.frames[static_cast<std::size_t>(i)]));
  }
  const int w = q.frames[0].width, h = q.frames[0].height;
  for (int i = 1; i < 4; ++i) {
    check_size(q.frames[i].width, q.frames[i].height, w, h, rec.frames[static_cast<std::size_t>(i)]);
  }
  if (!rec.gt_frame.empty()) {
    q.gt_frame = read_image(resolve(base_dir, rec.gt_frame));
    check_size(q.gt_frame.width, q.gt_frame.height, w, h, rec.gt_frame);
  }
  for (int i = 0; i < 3; ++i) {
    q.flow_fwd[i] = read_flo(resolve(base_dir, rec.flow_fwd[static_cast<std::size_t>(i)]));
    q.flow_bwd[i] = read_flo(resolve(base_dir, rec.flow_bwd[static_cast<std::size_t>(i)]));
    q.occ_fwd[i] = read_occlusion(resolve(base_dir, rec.occ_fwd[static_cast<std::size_t>(i)]));
    q.occ_bwd[i] = read_occlusion(resolve(base_dir, rec.occ_bwd[static_cast<std::size_t>(i)]));
    check_size(q.flow_fwd[i].width, q.flow_fwd[i].height, w, h, rec.flow_fwd[static_cast<std::size_t>(i)]);
    check_size(q.flow_bwd[i].width, q.flow_bwd[i].height, w, h, rec.flow_bwd[static_cast<std::size_t>(i)]);
    check_size(q.occ_fwd[i].width, q.occ_fwd[i].height, w, h, rec.occ_fwd[static_cast<std::size_t>(i)]);
    check_size(q.occ_bwd[i].width, q.occ_bwd[i].height, w, h, rec.occ_bwd[static_cast<std::size_t>(i)]);
  }
  q.source = "manifest";
  return q;
}

QuadRecord save_quad(const Quad& q, const std::string& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  QuadRecord rec;
  rec.t = q.t;
  static const char* frame_tag[4] = {"fm1", "f0", "f1", "f2"};
  for (int i = 0; i < 4; ++i) {
    rec.frames[static_cast<std::size_t>(i)] = stem + "_" + frame_tag[i] + ".ppm";
    write_image(q.frames[i], resolve(dir, rec.frames[static_cast<std::size_t>(i)]));
  }
  if (!q.gt_frame.empty()) {
    rec.gt_frame = stem + "_gt.ppm";
    write_image(q.gt_frame, resolve(dir, rec.gt_frame));
  }
  for (int i = 0; i < 3; ++i) {
    const std::string n = std::to_string(i);
    rec.flow_fwd[static_cast<std::size_t>(i)] = stem + "_fwd" + n + ".flo";
    rec.flow_bwd[static_cast<std::size_t>(i)] = stem + "_bwd" + n + ".flo";
    rec.occ_fwd[static_cast<std::size_t>(i)] = stem + "_occf" + n + ".pgm";
    rec.occ_bwd[static_cast<std::size_t>(i)] = stem + "_occb" + n + ".pgm";
    write_flo(q.flow_fwd[i], resolve(dir, rec.flow_fwd[static_cast<std::size_t>(i)]));
    write_flo(q.flow_bwd[i], resolve(dir, rec.flow_bwd[static_cast<std::size_t>(i)]));
    write_occlusion(q.occ_fwd[i], resolve(dir, rec.occ_fwd[static_cast<std::size_t>(i)]));
    write_occlusion(q.occ_bwd[i], resolve(dir, rec.occ_bwd[static_cast<std::size_t>(i)]));
  }
  return rec;
}

}  // namespace vfikit
