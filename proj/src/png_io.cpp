#include "stemtrace/png_io.hpp"

#include <png.h>

#include <array>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <string>

#include "stemtrace/error.hpp"
#include "stemtrace/simd/kernels.hpp"

namespace stemtrace {

namespace {

// libpng reports errors by longjmp; the message is parked here and turned
// into an exception once control is back in C++ land.
struct ErrorSink {
  char message[256] = {};
};

void on_png_error(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<ErrorSink*>(png_get_error_ptr(png));
  std::snprintf(sink->message, sizeof(sink->message), "%s", msg);
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

struct ReadCursor {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t offset;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t length) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cursor->size - cursor->offset < length) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, cursor->data + cursor->offset, length);
  cursor->offset += length;
}

void write_to_memory(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_noop(png_structp) {}

struct DecodeState {
  ErrorSink sink;
  ReadCursor cursor{};
  std::string rejection;  // set for well-formed but unsupported images
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  std::array<std::uint8_t, 256> palette_gray{};
  bool paletted = false;
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
};

// Returns false when libpng raised an error (message in state.sink).
bool decode(DecodeState& state) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &state.sink, on_png_error, on_png_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &state.cursor, read_from_memory);
  png_set_user_limits(png, 1u << 20, 1u << 20);
  png_read_info(png, info);

  state.width = png_get_image_width(png, info);
  state.height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_colorp palette = nullptr;
    int entries = 0;
    png_get_PLTE(png, info, &palette, &entries);
    for (int i = 0; i < entries; ++i) {
      if (palette[i].red != palette[i].green || palette[i].green != palette[i].blue) {
        state.rejection =
            "paletted PNG has colour entries; convert the mask to 8-bit grayscale (values 0/255) first";
        png_destroy_read_struct(&png, &info, nullptr);
        return true;
      }
      state.palette_gray[static_cast<std::size_t>(i)] = palette[i].red;
    }
    state.paletted = true;
    if (bit_depth < 8) png_set_packing(png);
  } else if (color_type == PNG_COLOR_TYPE_GRAY) {
    if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (bit_depth == 16) png_set_strip_16(png);
  } else {
    state.rejection = "PNG is colour or has an alpha channel; convert the mask to 8-bit grayscale "
                      "(values 0/255) first, no channel is picked implicitly";
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
  }
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != state.width) png_error(png, "unexpected row layout");

  state.pixels.resize(static_cast<std::size_t>(state.width) * state.height);
  state.rows.resize(state.height);
  for (png_uint_32 y = 0; y < state.height; ++y) {
    state.rows[y] = state.pixels.data() + static_cast<std::size_t>(y) * state.width;
  }
  png_read_image(png, state.rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

struct EncodeState {
  ErrorSink sink;
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> row;
};

bool encode(EncodeState& state, const BinaryMask& mask, const simd::Kernels& kernels) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &state.sink, on_png_error, on_png_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &state.out, write_to_memory, flush_noop);
  png_set_compression_level(png, 6);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_NONE);
  png_set_IHDR(png, info, static_cast<png_uint_32>(mask.width()), static_cast<png_uint_32>(mask.height()), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  state.row.resize(mask.width());
  for (std::size_t y = 0; y < mask.height(); ++y) {
    kernels.unpack(mask.row(y).data(), mask.width(), state.row.data());
    png_write_row(png, state.row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

BinaryMask read_mask_png(std::span<const std::uint8_t> bytes, const ExecPolicy& policy) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::format, "not a PNG file (bad signature)");
  }
  DecodeState state;
  state.cursor = {bytes.data(), bytes.size(), 0};
  if (!decode(state)) {
    throw Error(ErrorCode::format, std::string("corrupt PNG: ") + state.sink.message);
  }
  if (!state.rejection.empty()) throw Error(ErrorCode::format, state.rejection);

  BinaryMask mask(state.width, state.height);
  const simd::Kernels& kernels = policy.resolved_kernels();
  if (state.paletted) {
    for (auto& p : state.pixels) p = state.palette_gray[p];
  }
  for (std::size_t y = 0; y < mask.height(); ++y) {
    kernels.pack_threshold(state.rows[y], mask.width(), mask.row(y).data());
  }
  return mask;
}

std::vector<std::uint8_t> write_mask_png(const BinaryMask& mask, const ExecPolicy& policy) {
  EncodeState state;
  state.out.reserve(1024 + mask.pixel_count() / 64);
  if (!encode(state, mask, policy.resolved_kernels())) {
    throw Error(ErrorCode::format, std::string("PNG encoding failed: ") + state.sink.message);
  }
  return std::move(state.out);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::io, "read failed for " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

BinaryMask load_mask_png(const std::filesystem::path& path, const ExecPolicy& policy) {
  return read_mask_png(read_file_bytes(path), policy);
}

void save_mask_png(const std::filesystem::path& path, const BinaryMask& mask, const ExecPolicy& policy) {
  write_file_bytes(path, write_mask_png(mask, policy));
}

}  // namespace stemtrace
