#pragma once

// 8-bit PNG / JPEG raster I/O. Samples map to [0,1] by /255 on load and are
// rounded back to 8 bits on save. Loaded images always have 3 channels.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "lowlight/image.hpp"

namespace lowlight {

namespace io_detail {

inline std::string lower_ext(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext;
}

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline bool is_png(const std::vector<unsigned char>& b) {
  static constexpr unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  return b.size() >= 8 && std::memcmp(b.data(), sig, 8) == 0;
}

inline bool is_jpeg(const std::vector<unsigned char>& b) {
  return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

inline Image from_rgb8(const unsigned char* px, int w, int h) {
  Image img(w, h, 3);
  const std::size_t n = static_cast<std::size_t>(w) * h;
  for (int c = 0; c < 3; ++c) {
    auto plane = img.plane(c);
    for (std::size_t p = 0; p < n; ++p) plane[p] = static_cast<float>(px[p * 3 + c]) / 255.0f;
  }
  return img;
}

inline std::vector<unsigned char> to_interleaved8(const Image& img) {
  const std::size_t n = img.plane_size();
  const int ch = img.channels();
  std::vector<unsigned char> out(n * ch);
  for (int c = 0; c < ch; ++c) {
    auto plane = img.plane(c);
    for (std::size_t p = 0; p < n; ++p) {
      const float v = std::clamp(plane[p], 0.0f, 1.0f);
      out[p * ch + c] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
  }
  return out;
}

inline Image decode_png(const std::vector<unsigned char>& bytes, const std::string& where) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw IoError(where + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError(where + ": " + msg);
  }
  return from_rgb8(buffer.data(), static_cast<int>(image.width), static_cast<int>(image.height));
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

inline void jpeg_count_warning(j_common_ptr cinfo, int level) {
  if (level < 0) ++cinfo->err->num_warnings;
}

// Only trivially destructible locals live in this frame between setjmp and longjmp.
inline bool decode_jpeg_raw(const std::vector<unsigned char>& bytes, std::vector<unsigned char>& out, int& w,
                            int& h, char* message) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.emit_message = jpeg_count_warning;
  if (setjmp(err.jump)) {
    std::strncpy(message, err.message, JMSG_LENGTH_MAX);
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  w = static_cast<int>(cinfo.output_width);
  h = static_cast<int>(cinfo.output_height);
  out.resize(static_cast<std::size_t>(w) * h * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  // libjpeg pads a truncated stream with fake EOI markers and only warns.
  const bool truncated = err.base.num_warnings > 0;
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  if (truncated) {
    std::strncpy(message, "corrupt or truncated JPEG data", JMSG_LENGTH_MAX);
    return false;
  }
  return true;
}

inline Image decode_jpeg(const std::vector<unsigned char>& bytes, const std::string& where) {
  std::vector<unsigned char> px;
  int w = 0, h = 0;
  char message[JMSG_LENGTH_MAX] = {0};
  if (!decode_jpeg_raw(bytes, px, w, h, message)) throw IoError(where + ": " + message);
  return from_rgb8(px.data(), w, h);
}

inline bool encode_jpeg_raw(const std::string& path, const unsigned char* px, int w, int h, int channels,
                            int quality, char* message) {
  jpeg_compress_struct cinfo;
  JpegErrorManager err;
  std::FILE* file = std::fopen(path.c_str(), "wb");
  if (!file) {
    std::strncpy(message, "cannot open for writing", JMSG_LENGTH_MAX);
    return false;
  }
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    std::strncpy(message, err.message, JMSG_LENGTH_MAX);
    jpeg_destroy_compress(&cinfo);
    std::fclose(file);
    return false;
  }
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, file);
  cinfo.image_width = static_cast<JDIMENSION>(w);
  cinfo.image_height = static_cast<JDIMENSION>(h);
  cinfo.input_components = channels;
  cinfo.in_color_space = channels == 3 ? JCS_RGB : JCS_GRAYSCALE;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<unsigned char*>(px) + static_cast<std::size_t>(cinfo.next_scanline) * w * channels;
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  return std::fclose(file) == 0;
}

}  // namespace io_detail

inline bool is_supported_image(const std::filesystem::path& path) {
  const auto ext = io_detail::lower_ext(path);
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

/// Loads a PNG or JPEG file (detected by signature) as a 3-channel image.
inline Image load_image(const std::filesystem::path& path) {
  const auto bytes = io_detail::read_bytes(path);
  if (io_detail::is_png(bytes)) return io_detail::decode_png(bytes, path.string());
  if (io_detail::is_jpeg(bytes)) return io_detail::decode_jpeg(bytes, path.string());
  throw IoError(path.string() + ": unsupported or unrecognized image format");
}

/// Saves as PNG or JPEG by extension. 1- and 3-channel images are accepted.
inline void save_image(const std::filesystem::path& path, const Image& img, int jpeg_quality = 95) {
  if (img.channels() != 1 && img.channels() != 3) throw InvalidInput("save_image: need 1 or 3 channels");
  if (img.empty()) throw InvalidInput("save_image: empty image");
  const auto ext = io_detail::lower_ext(path);
  const auto px = io_detail::to_interleaved8(img);
  if (ext == ".png") {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, px.data(), 0, nullptr)) {
      throw IoError(path.string() + ": " + image.message);
    }
    return;
  }
  if (ext == ".jpg" || ext == ".jpeg") {
    char message[JMSG_LENGTH_MAX] = {0};
    if (!io_detail::encode_jpeg_raw(path.string(), px.data(), img.width(), img.height(), img.channels(),
                                    jpeg_quality, message)) {
      throw IoError(path.string() + ": " + message);
    }
    return;
  }
  throw IoError(path.string() + ": unsupported output extension '" + ext + "'");
}

/// Lists supported image files in a directory, sorted by filename.
inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError(dir.string() + ": not a directory");
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_supported_image(entry.path())) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
  return out;
}

}  // namespace lowlight
