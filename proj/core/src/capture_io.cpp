#include "irp/capture_io.hpp"

#include <png.h>
#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "irp/error.hpp"

namespace irp {
namespace {

static_assert(std::endian::native == std::endian::little,
              "capture I/O assumes a little-endian host");

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

template <typename T>
void put_pod(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T>
T get_pod(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

bool has_png_signature(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

QuantizedImage decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw FormatError(name + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw FormatError(name + ": " + msg);
  }
  Image<std::uint16_t> px(static_cast<int>(image.width), static_cast<int>(image.height), channels,
                          std::vector<std::uint16_t>(buffer.begin(), buffer.end()));
  return QuantizedImage(std::move(px), 255);
}

std::vector<std::uint8_t> encode_png(const QuantizedImage& img) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw InvalidArgument("PNG captures must have 1 or 3 channels");
  }
  std::vector<std::uint8_t> raw(img.data().begin(), img.data().end());
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, raw.data(), 0, nullptr)) {
    throw FormatError(std::string("PNG encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, raw.data(), 0, nullptr)) {
    throw FormatError(std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace

std::string capture_extension(int m_max) { return m_max == 255 ? ".png" : ".irpq"; }

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

std::vector<std::uint8_t> encode_irpq(const QuantizedImage& img) {
  if (img.width() > 0xffff || img.height() > 0xffff) {
    throw InvalidArgument("IRPQ dimensions are limited to 65535");
  }
  std::vector<std::uint8_t> out(kIrpqMagic, kIrpqMagic + 4);
  put_u16(out, static_cast<std::uint16_t>(img.width()));
  put_u16(out, static_cast<std::uint16_t>(img.height()));
  out.reserve(8 + 2 * img.data().size());
  for (auto v : img.data()) put_u16(out, v);
  return out;
}

QuantizedImage decode_irpq(const std::vector<std::uint8_t>& bytes, int m_max) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kIrpqMagic, 4) != 0) {
    throw FormatError("IRPQ: missing magic");
  }
  const int w = get_u16(bytes.data() + 4);
  const int h = get_u16(bytes.data() + 6);
  if (w == 0 || h == 0) throw FormatError("IRPQ: zero dimension");
  const std::size_t payload = bytes.size() - 8;
  const std::size_t per_channel = 2 * static_cast<std::size_t>(w) * h;
  if (payload == 0 || payload % per_channel != 0) {
    throw FormatError("IRPQ: payload of " + std::to_string(payload) + " bytes does not fit " +
                      std::to_string(w) + "x" + std::to_string(h));
  }
  const int channels = static_cast<int>(payload / per_channel);
  std::vector<std::uint16_t> values(payload / 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = get_u16(bytes.data() + 8 + 2 * i);
    if (values[i] > m_max) throw FormatError("IRPQ: value exceeds m_max");
  }
  return QuantizedImage(Image<std::uint16_t>(w, h, channels, std::move(values)), m_max);
}

void write_capture(const std::filesystem::path& path, const QuantizedImage& img) {
  write_file_bytes(path, img.m_max() == 255 ? encode_png(img) : encode_irpq(img));
}

QuantizedImage read_capture(const std::filesystem::path& path, int irpq_m_max) {
  const auto bytes = read_file_bytes(path);
  if (has_png_signature(bytes)) return decode_png(bytes, path.string());
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kIrpqMagic, 4) == 0) {
    try {
      return decode_irpq(bytes, irpq_m_max);
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }
  throw FormatError(path.string() + ": neither PNG nor IRPQ");
}

std::vector<std::uint8_t> encode_flo(const FlowField& flow) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + 8 * flow.u_values().size());
  put_pod(out, kFloMagic);
  put_pod(out, static_cast<std::int32_t>(flow.width()));
  put_pod(out, static_cast<std::int32_t>(flow.height()));
  const auto u = flow.u_values();
  const auto v = flow.v_values();
  for (std::size_t i = 0; i < u.size(); ++i) {
    put_pod(out, u[i]);
    put_pod(out, v[i]);
  }
  return out;
}

FlowField decode_flo(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12) throw FormatError(".flo: truncated header");
  if (get_pod<float>(bytes.data()) != kFloMagic) throw FormatError(".flo: wrong magic");
  const auto w = get_pod<std::int32_t>(bytes.data() + 4);
  const auto h = get_pod<std::int32_t>(bytes.data() + 8);
  if (w <= 0 || h <= 0 || w > (1 << 16) || h > (1 << 16)) throw FormatError(".flo: bad dimensions");
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() != 12 + 8 * n) throw FormatError(".flo: payload size mismatch");
  std::vector<float> u(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = get_pod<float>(bytes.data() + 12 + 8 * i);
    v[i] = get_pod<float>(bytes.data() + 16 + 8 * i);
  }
  try {
    return FlowField(w, h, std::move(u), std::move(v));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string(".flo: ") + e.what());
  }
}

void write_flow(const std::filesystem::path& path, const FlowField& flow) {
  write_file_bytes(path, encode_flo(flow));
}

FlowField read_flow(const std::filesystem::path& path) {
  try {
    return decode_flo(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string bytes_checksum(const std::vector<std::uint8_t>& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(crc & 0xffffffffUL));
  return std::string("crc32:") + buf;
}

std::string file_checksum(const std::filesystem::path& path) {
  return bytes_checksum(read_file_bytes(path));
}

}  // namespace irp
