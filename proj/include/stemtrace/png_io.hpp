#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "stemtrace/mask.hpp"

namespace stemtrace {

/// Decodes a grayscale (any bit depth) or gray-paletted PNG; a pixel is stem
/// when its gray value is >= 128. Throws Error(format) for non-PNG bytes and
/// for colour or alpha images (which must be converted to grayscale first).
BinaryMask read_mask_png(std::span<const std::uint8_t> bytes, const ExecPolicy& policy = {});

/// 8-bit grayscale, values {0, 255}, no interlacing and no time or text
/// chunks, so equal masks always encode to equal bytes.
std::vector<std::uint8_t> write_mask_png(const BinaryMask& mask, const ExecPolicy& policy = {});

BinaryMask load_mask_png(const std::filesystem::path& path, const ExecPolicy& policy = {});
void save_mask_png(const std::filesystem::path& path, const BinaryMask& mask, const ExecPolicy& policy = {});

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace stemtrace
