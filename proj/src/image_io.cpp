#include "cst/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <png.h>

namespace cst {

namespace {

std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f != nullptr) {
            std::fclose(f);
        }
    }
};
using FileHandle = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error(path.string() + ": " + what);
}

// ---------------------------------------------------------------- PNG read

ScanImage load_png(const std::filesystem::path& path) {
    FileHandle file(std::fopen(path.string().c_str(), "rb"));
    if (!file) {
        fail(path, "cannot open file");
    }

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) {
        fail(path, "png reader allocation failed");
    }
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail(path, "png info allocation failed");
    }

    std::vector<std::uint8_t> raw;
    int rows = 0;
    int cols = 0;
    int bit_depth = 0;
    int channels = 0;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "corrupt or truncated PNG");
    }

    png_init_io(png, file.get());
    png_read_info(png, info);

    cols = static_cast<int>(png_get_image_width(png, info));
    rows = static_cast<int>(png_get_image_height(png, info));
    bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png);
    }
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS) != 0) {
        png_set_tRNS_to_alpha(png);
    }
    png_set_strip_alpha(png);
    if (bit_depth == 16) {
        png_set_swap(png);  // libpng reads big-endian; we want host LE order
    }
    png_read_update_info(png, info);

    bit_depth = png_get_bit_depth(png, info);
    channels = png_get_channels(png, info);
    if (bit_depth != 8 && bit_depth != 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "unsupported PNG bit depth");
    }
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "unsupported PNG channel layout");
    }

    const std::size_t stride = png_get_rowbytes(png, info);
    raw.assign(stride * static_cast<std::size_t>(rows), 0);
    std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(rows));
    for (int r = 0; r < rows; ++r) {
        row_ptrs[static_cast<std::size_t>(r)] = raw.data() + stride * static_cast<std::size_t>(r);
    }
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    const int levels = bit_depth == 8 ? 256 : 65536;
    std::vector<std::uint16_t> pixels(static_cast<std::size_t>(rows) *
                                      static_cast<std::size_t>(cols));
    const int bytes = bit_depth / 8;
    for (int r = 0; r < rows; ++r) {
        const std::uint8_t* row = raw.data() + stride * static_cast<std::size_t>(r);
        for (int c = 0; c < cols; ++c) {
            auto sample = [&](int ch) -> double {
                const std::uint8_t* p = row + (static_cast<std::size_t>(c) * channels + ch) * bytes;
                if (bytes == 1) {
                    return static_cast<double>(*p);
                }
                std::uint16_t v;
                std::memcpy(&v, p, sizeof v);
                return static_cast<double>(v);
            };
            double value;
            if (channels == 1) {
                value = sample(0);
            } else {
                value = 0.299 * sample(0) + 0.587 * sample(1) + 0.114 * sample(2);
            }
            pixels[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                   static_cast<std::size_t>(c)] =
                static_cast<std::uint16_t>(std::lround(value));
        }
    }
    return ScanImage::from_pixels(rows, cols, levels, std::move(pixels));
}

// --------------------------------------------------------------- PNG write

void save_png_gray(const ScanImage& image, const std::filesystem::path& path) {
    FileHandle file(std::fopen(path.string().c_str(), "wb"));
    if (!file) {
        fail(path, "cannot open file for writing");
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) {
        fail(path, "png writer allocation failed");
    }
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        fail(path, "png info allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(path, "png write failed");
    }

    const int bit_depth = image.levels() <= 256 ? 8 : 16;
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.cols()),
                 static_cast<png_uint_32>(image.rows()), bit_depth, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    if (bit_depth == 8) {
        std::vector<std::uint8_t> row(static_cast<std::size_t>(image.cols()));
        for (int r = 0; r < image.rows(); ++r) {
            for (int c = 0; c < image.cols(); ++c) {
                row[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(image.at(r, c));
            }
            png_write_row(png, row.data());
        }
    } else {
        std::vector<std::uint8_t> row(static_cast<std::size_t>(image.cols()) * 2);
        for (int r = 0; r < image.rows(); ++r) {
            for (int c = 0; c < image.cols(); ++c) {
                const std::uint16_t v = image.at(r, c);
                row[static_cast<std::size_t>(c) * 2] = static_cast<std::uint8_t>(v >> 8);
                row[static_cast<std::size_t>(c) * 2 + 1] = static_cast<std::uint8_t>(v & 0xff);
            }
            png_write_row(png, row.data());
        }
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// --------------------------------------------------------------- PGM codec

ScanImage load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(path, "cannot open file");
    }
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P2") {
        fail(path, "not a PGM file");
    }
    auto next_token = [&]() -> long {
        // Skip whitespace and '#' comment lines between header fields.
        while (true) {
            const int ch = in.peek();
            if (ch == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(ch) != 0) {
                in.get();
            } else {
                break;
            }
        }
        long value = -1;
        in >> value;
        return in ? value : -1;
    };
    const long cols = next_token();
    const long rows = next_token();
    const long maxval = next_token();
    if (cols <= 0 || rows <= 0 || maxval <= 0 || maxval > 65535) {
        fail(path, "malformed PGM header");
    }
    const std::size_t count = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    std::vector<std::uint16_t> pixels(count);

    if (magic == "P2") {
        for (std::size_t i = 0; i < count; ++i) {
            long v = -1;
            in >> v;
            if (!in || v < 0 || v > maxval) {
                fail(path, "malformed PGM pixel data");
            }
            pixels[i] = static_cast<std::uint16_t>(v);
        }
    } else {
        in.get();  // single whitespace separating header from raster
        const int bytes = maxval > 255 ? 2 : 1;
        std::vector<std::uint8_t> raw(count * static_cast<std::size_t>(bytes));
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
            fail(path, "truncated PGM raster");
        }
        for (std::size_t i = 0; i < count; ++i) {
            if (bytes == 1) {
                pixels[i] = raw[i];
            } else {
                pixels[i] = static_cast<std::uint16_t>((raw[i * 2] << 8) | raw[i * 2 + 1]);
            }
        }
    }
    const int levels = maxval > 255 ? 65536 : 256;
    return ScanImage::from_pixels(static_cast<int>(rows), static_cast<int>(cols), levels,
                                  std::move(pixels));
}

void save_pgm(const ScanImage& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(path, "cannot open file for writing");
    }
    const int maxval = image.levels() <= 256 ? 255 : 65535;
    out << "P5\n" << image.cols() << ' ' << image.rows() << '\n' << maxval << '\n';
    if (maxval == 255) {
        for (int r = 0; r < image.rows(); ++r) {
            for (int c = 0; c < image.cols(); ++c) {
                out.put(static_cast<char>(static_cast<std::uint8_t>(image.at(r, c))));
            }
        }
    } else {
        for (int r = 0; r < image.rows(); ++r) {
            for (int c = 0; c < image.cols(); ++c) {
                const std::uint16_t v = image.at(r, c);
                out.put(static_cast<char>(v >> 8));
                out.put(static_cast<char>(v & 0xff));
            }
        }
    }
    if (!out) {
        fail(path, "write failed");
    }
}

}  // namespace

ScanImage load_image(const std::filesystem::path& path) {
    const std::string ext = lower_extension(path);
    if (ext == ".png") {
        return load_png(path);
    }
    if (ext == ".pgm") {
        return load_pgm(path);
    }
    fail(path, "unsupported image format (expected .png or .pgm)");
}

void save_image(const ScanImage& image, const std::filesystem::path& path) {
    const std::string ext = lower_extension(path);
    if (ext == ".png") {
        save_png_gray(image, path);
        return;
    }
    if (ext == ".pgm") {
        save_pgm(image, path);
        return;
    }
    fail(path, "unsupported image format (expected .png or .pgm)");
}

void save_real_image(const RealImage& image, const std::filesystem::path& path) {
    const RealImage normalized = normalize_min_max(image);
    std::vector<std::uint16_t> pixels(normalized.values().size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        pixels[i] = static_cast<std::uint16_t>(std::lround(normalized.values()[i] * 65535.0));
    }
    save_image(ScanImage::from_pixels(image.rows(), image.cols(), 65536, std::move(pixels)), path);
}

void save_overlay(const ScanImage& image, const std::vector<OverlayBox>& boxes,
                  const std::filesystem::path& path) {
    if (lower_extension(path) != ".png") {
        fail(path, "overlay output must be a .png file");
    }
    // Base layer: image scaled to 8-bit gray, replicated across RGB.
    const double scale = 255.0 / static_cast<double>(image.levels() - 1);
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(image.rows()) *
                                  static_cast<std::size_t>(image.cols()) * 3);
    for (int r = 0; r < image.rows(); ++r) {
        for (int c = 0; c < image.cols(); ++c) {
            const auto v = static_cast<std::uint8_t>(std::lround(image.at(r, c) * scale));
            const std::size_t base = (static_cast<std::size_t>(r) *
                                          static_cast<std::size_t>(image.cols()) +
                                      static_cast<std::size_t>(c)) *
                                     3;
            rgb[base] = v;
            rgb[base + 1] = v;
            rgb[base + 2] = v;
        }
    }
    auto set_px = [&](int r, int c, const OverlayBox& ob) {
        if (r < 0 || r >= image.rows() || c < 0 || c >= image.cols()) {
            return;
        }
        const std::size_t base =
            (static_cast<std::size_t>(r) * static_cast<std::size_t>(image.cols()) +
             static_cast<std::size_t>(c)) *
            3;
        rgb[base] = ob.r;
        rgb[base + 1] = ob.g;
        rgb[base + 2] = ob.b;
    };
    for (const OverlayBox& ob : boxes) {
        const int bottom = ob.box.bottom();
        const int right = ob.box.right();
        for (int c = ob.box.left; c <= right; ++c) {
            set_px(ob.box.top, c, ob);
            set_px(bottom, c, ob);
        }
        for (int r = ob.box.top; r <= bottom; ++r) {
            set_px(r, ob.box.left, ob);
            set_px(r, right, ob);
        }
    }

    FileHandle file(std::fopen(path.string().c_str(), "wb"));
    if (!file) {
        fail(path, "cannot open file for writing");
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) {
        fail(path, "png writer allocation failed");
    }
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        fail(path, "png info allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(path, "png write failed");
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.cols()),
                 static_cast<png_uint_32>(image.rows()), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < image.rows(); ++r) {
        png_write_row(png, rgb.data() + static_cast<std::size_t>(r) *
                                            static_cast<std::size_t>(image.cols()) * 3);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace cst
