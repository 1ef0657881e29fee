#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "irp/image.hpp"

namespace irp {

// Captures with m_max == 255 are stored as 8-bit grayscale or RGB PNG. Anything else
// uses the IRPQ raw layout:
//
//   offset 0  "IRPQ"
//   offset 4  u16 width   (little-endian)
//   offset 6  u16 height  (little-endian)
//   offset 8  width*height*channels u16 code values, little-endian, interleaved
//
// The channel count is implied by the payload length. m_max is not stored and must be
// supplied when reading.
inline constexpr char kIrpqMagic[4] = {'I', 'R', 'P', 'Q'};

// ".png" when m_max == 255, ".irpq" otherwise.
std::string capture_extension(int m_max);

void write_capture(const std::filesystem::path& path, const QuantizedImage& img);

// Detects the format from the leading bytes. `irpq_m_max` applies to IRPQ files only;
// PNG captures always decode with m_max = 255. Throws FormatError on malformed input
// and IoError when the file cannot be opened.
QuantizedImage read_capture(const std::filesystem::path& path, int irpq_m_max = 255);

std::vector<std::uint8_t> encode_irpq(const QuantizedImage& img);
QuantizedImage decode_irpq(const std::vector<std::uint8_t>& bytes, int m_max);

// Middlebury .flo: f32 202021.25, i32 width, i32 height, then row-major (u, v) f32 pairs,
// all little-endian.
inline constexpr float kFloMagic = 202021.25f;

void write_flow(const std::filesystem::path& path, const FlowField& flow);
FlowField read_flow(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_flo(const FlowField& flow);
FlowField decode_flo(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

// "crc32:xxxxxxxx" over the file contents.
std::string file_checksum(const std::filesystem::path& path);
std::string bytes_checksum(const std::vector<std::uint8_t>& bytes);

}  // namespace irp
