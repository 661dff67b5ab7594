// License: Apache 2.0. See LICENSE file in root directory.

#include "depthcal/depth_image.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>

#include "depthcal/errors.hpp"
#include "depthcal/file_io.hpp"

namespace depthcal {
namespace {

// Next PNM header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

DepthFrame read_depth_frame(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open depth raster: " + path.string());

  if (next_token(in) != "P5") {
    throw UnsupportedFormatError("not a binary PGM (P5): " + path.string());
  }
  int width = 0, height = 0;
  long maxval = 0;
  try {
    width = std::stoi(next_token(in));
    height = std::stoi(next_token(in));
    maxval = std::stol(next_token(in));
  } catch (const std::exception&) {
    throw CorruptFileError("malformed PGM header: " + path.string());
  }
  if (width <= 0 || height <= 0) {
    throw CorruptFileError("bad PGM dimensions: " + path.string());
  }
  if (maxval != 65535) {
    throw UnsupportedFormatError("depth rasters must be 16-bit (maxval 65535): " +
                                 path.string());
  }

  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<unsigned char> buf(n * 2);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
    throw CorruptFileError("truncated PGM data: " + path.string());
  }

  DepthFrame frame(width, height);
  for (std::size_t i = 0; i < n; ++i) {
    // PGM multi-byte samples are big-endian.
    const std::uint16_t mm = static_cast<std::uint16_t>(
        (static_cast<std::uint16_t>(buf[2 * i]) << 8) | buf[2 * i + 1]);
    frame.depths[i] = mm == 0 ? DepthFrame::kInvalidDepth : mm / 1000.0;
  }
  return frame;
}

void write_depth_frame(const std::filesystem::path& path,
                       const DepthFrame& frame) {
  if (frame.width <= 0 || frame.height <= 0 ||
      frame.depths.size() != frame.pixel_count()) {
    throw InvalidArgumentError("write_depth_frame: malformed frame");
  }
  std::string out = "P5\n" + std::to_string(frame.width) + " " +
                    std::to_string(frame.height) + "\n65535\n";
  out.reserve(out.size() + frame.depths.size() * 2);
  for (double z : frame.depths) {
    long long mm = z > 0.0 ? std::llround(z * 1000.0) : 0;
    if (mm < 0) mm = 0;
    if (mm > 65535) mm = 65535;
    out.push_back(static_cast<char>((mm >> 8) & 0xff));
    out.push_back(static_cast<char>(mm & 0xff));
  }
  write_file_atomic(path, out);
}

}  // namespace depthcal
