// License: Apache 2.0. See LICENSE file in root directory.

#include "depthcal/calibration_file.hpp"

#include <bit>
#include <cstring>

#include <json.hpp>

#include "depthcal/errors.hpp"
#include "depthcal/file_io.hpp"

namespace depthcal {
namespace {

static_assert(std::endian::native == std::endian::little,
              "calibration files are little-endian; add byte swaps to port");

constexpr char kMagic[4] = {'D', 'C', 'A', 'L'};

void append_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

void append_f64(std::string& out, double v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}

class Reader {
 public:
  Reader(const std::string& data, std::string path)
      : data_(data), path_(std::move(path)) {}

  std::uint32_t u32() {
    ensure(4);
    std::uint32_t v;
    std::memcpy(&v, data_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  double f64() {
    ensure(8);
    double v;
    std::memcpy(&v, data_.data() + pos_, 8);
    pos_ += 8;
    return v;
  }
  std::string bytes(std::size_t n) {
    ensure(n);
    std::string v = data_.substr(pos_, n);
    pos_ += n;
    return v;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void ensure(std::size_t n) {
    if (pos_ + n > data_.size()) {
      throw CorruptFileError("truncated calibration file: " + path_);
    }
  }
  const std::string& data_;
  std::string path_;
  std::size_t pos_{0};
};

nlohmann::json parse_json(const std::string& text, const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw CorruptFileError("invalid JSON: " + path);
  return j;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_calibration_binary(const std::filesystem::path& path,
                              const CalibrationData& data) {
  const BiasMap& map = data.bias_map;
  const std::size_t n = map.coefficients.size();
  if (map.width <= 0 || map.height <= 0 ||
      n != static_cast<std::size_t>(map.width) * map.height ||
      map.valid.size() != n) {
    throw InvalidArgumentError("write_calibration_binary: malformed bias map");
  }

  std::string out;
  out.reserve(32 + n * 24 + n / 8 + data.provenance.size());
  out.append(kMagic, 4);
  append_u32(out, CalibrationData::kVersion);
  append_u32(out, static_cast<std::uint32_t>(map.width));
  append_u32(out, static_cast<std::uint32_t>(map.height));
  append_f64(out, data.noise.a);
  append_f64(out, data.noise.b);
  append_f64(out, data.noise.c);
  append_f64(out, data.noise.sigma_floor);
  for (const PixelBias& p : map.coefficients) {
    append_f64(out, p.a);
    append_f64(out, p.b);
    append_f64(out, p.c);
  }
  std::string bitmap((n + 7) / 8, '\0');
  for (std::size_t i = 0; i < n; ++i) {
    if (map.valid[i]) bitmap[i / 8] |= static_cast<char>(1u << (i % 8));
  }
  out += bitmap;
  append_u32(out, static_cast<std::uint32_t>(data.provenance.size()));
  out += data.provenance;
  write_file_atomic(path, out);
}

CalibrationData read_calibration_binary(const std::filesystem::path& path) {
  const std::string raw = read_file(path);
  Reader r(raw, path.string());
  if (r.bytes(4) != std::string(kMagic, 4)) {
    throw UnsupportedFormatError("missing DCAL magic: " + path.string());
  }
  const std::uint32_t version = r.u32();
  if (version != CalibrationData::kVersion) {
    throw UnsupportedFormatError("unknown calibration version " +
                                 std::to_string(version) + ": " + path.string());
  }
  const std::uint32_t width = r.u32();
  const std::uint32_t height = r.u32();
  if (width == 0 || height == 0 || width > 1u << 16 || height > 1u << 16) {
    throw CorruptFileError("implausible calibration dimensions: " + path.string());
  }
  CalibrationData data;
  data.noise.a = r.f64();
  data.noise.b = r.f64();
  data.noise.c = r.f64();
  data.noise.sigma_floor = r.f64();
  data.bias_map = BiasMap(static_cast<int>(width), static_cast<int>(height));
  const std::size_t n = data.bias_map.coefficients.size();
  for (std::size_t i = 0; i < n; ++i) {
    PixelBias& p = data.bias_map.coefficients[i];
    p.a = r.f64();
    p.b = r.f64();
    p.c = r.f64();
  }
  const std::string bitmap = r.bytes((n + 7) / 8);
  for (std::size_t i = 0; i < n; ++i) {
    data.bias_map.valid[i] =
        (static_cast<unsigned char>(bitmap[i / 8]) >> (i % 8)) & 1u;
  }
  const std::uint32_t prov_len = r.u32();
  data.provenance = r.bytes(prov_len);
  if (r.remaining() != 0) {
    throw CorruptFileError("trailing bytes in calibration file: " + path.string());
  }
  return data;
}

void write_calibration_json(const std::filesystem::path& path,
                            const CalibrationData& data) {
  nlohmann::json j;
  j["version"] = CalibrationData::kVersion;
  j["width"] = data.bias_map.width;
  j["height"] = data.bias_map.height;
  j["noise"] = {{"a", data.noise.a},
                {"b", data.noise.b},
                {"c", data.noise.c},
                {"sigma_floor", data.noise.sigma_floor}};
  nlohmann::json pixels = nlohmann::json::array();
  for (const PixelBias& p : data.bias_map.coefficients) {
    pixels.push_back({p.a, p.b, p.c});
  }
  j["pixels"] = std::move(pixels);
  j["valid"] = data.bias_map.valid;
  if (!data.provenance.empty()) {
    j["provenance"] = parse_json(data.provenance, path.string());
  }
  write_file_atomic(path, j.dump(1, '\t') + "\n");
}

CalibrationData read_calibration_json(const std::filesystem::path& path) {
  const nlohmann::json j = parse_json(read_file(path), path.string());
  try {
    CalibrationData data;
    const int width = j.at("width").get<int>();
    const int height = j.at("height").get<int>();
    if (j.at("version").get<std::uint32_t>() != CalibrationData::kVersion) {
      throw UnsupportedFormatError("unknown calibration version: " + path.string());
    }
    data.bias_map = BiasMap(width, height);
    const auto& noise = j.at("noise");
    data.noise.a = noise.at("a").get<double>();
    data.noise.b = noise.at("b").get<double>();
    data.noise.c = noise.at("c").get<double>();
    data.noise.sigma_floor = noise.at("sigma_floor").get<double>();
    const auto& pixels = j.at("pixels");
    const auto& valid = j.at("valid");
    if (pixels.size() != data.bias_map.coefficients.size() ||
        valid.size() != data.bias_map.valid.size()) {
      throw CorruptFileError("coefficient array length mismatch: " + path.string());
    }
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      data.bias_map.coefficients[i] = PixelBias{pixels[i].at(0).get<double>(),
                                                pixels[i].at(1).get<double>(),
                                                pixels[i].at(2).get<double>()};
      data.bias_map.valid[i] = valid[i].get<int>() ? 1 : 0;
    }
    if (j.contains("provenance")) data.provenance = j["provenance"].dump();
    return data;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFileError("bad calibration JSON (" + std::string(e.what()) +
                           "): " + path.string());
  }
}

CalibrationData read_calibration(const std::filesystem::path& path) {
  const std::string head = read_file(path).substr(0, 4);
  if (head.size() >= 4 && head.compare(0, 4, kMagic, 4) == 0) {
    return read_calibration_binary(path);
  }
  return read_calibration_json(path);
}

}  // namespace depthcal
