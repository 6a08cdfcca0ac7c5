#include "aslseg/pngplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "aslseg/errors.hpp"

namespace aslseg {

// ---------------------------------------------------------------------------
// PNG writing

namespace {

void put_u32_be(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(static_cast<std::uint8_t>(x >> 24));
    v.push_back(static_cast<std::uint8_t>(x >> 16));
    v.push_back(static_cast<std::uint8_t>(x >> 8));
    v.push_back(static_cast<std::uint8_t>(x));
}

void write_chunk(std::ofstream& f, const char type[4], const std::vector<std::uint8_t>& data) {
    std::vector<std::uint8_t> head;
    put_u32_be(head, static_cast<std::uint32_t>(data.size()));
    f.write(reinterpret_cast<const char*>(head.data()), 4);
    f.write(type, 4);
    if (!data.empty()) f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    std::uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
    if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
    std::vector<std::uint8_t> tail;
    put_u32_be(tail, crc);
    f.write(reinterpret_cast<const char*>(tail.data()), 4);
}

} // namespace

void write_png_rgb(const std::string& path, int width, int height,
                   const std::vector<std::uint8_t>& rgb) {
    if (static_cast<std::size_t>(width) * height * 3 != rgb.size())
        throw ValidationError("write_png_rgb: buffer size mismatch");

    // filter byte 0 per scanline
    std::vector<std::uint8_t> raw;
    raw.reserve((static_cast<std::size_t>(width) * 3 + 1) * height);
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);
        const std::uint8_t* row = rgb.data() + static_cast<std::size_t>(y) * width * 3;
        raw.insert(raw.end(), row, row + static_cast<std::size_t>(width) * 3);
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw IoError("png deflate failed for " + path);
    compressed.resize(bound);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    f.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<std::uint8_t> ihdr;
    put_u32_be(ihdr, static_cast<std::uint32_t>(width));
    put_u32_be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8); // bit depth
    ihdr.push_back(2); // truecolor
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    write_chunk(f, "IHDR", ihdr);
    write_chunk(f, "IDAT", compressed);
    write_chunk(f, "IEND", {});
    if (!f) throw IoError("short write to " + path);
}

void write_png_gray(const std::string& path, const ImageGrid& img) {
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(img.rows()) * img.cols() * 3);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const float v = std::clamp(img.raw()[i], 0.f, 1.f);
        const std::uint8_t g = static_cast<std::uint8_t>(std::lround(v * 255.f));
        rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = g;
    }
    write_png_rgb(path, img.cols(), img.rows(), rgb);
}

// ---------------------------------------------------------------------------
// canvas + font

namespace {

// 5x7 glyphs, one byte per row, low 5 bits used
struct Glyph {
    char ch;
    std::uint8_t rows[7];
};

constexpr Glyph kFont[] = {
    {' ', {0, 0, 0, 0, 0, 0, 0}},
    {'%', {0b11001, 0b11010, 0b00010, 0b00100, 0b01000, 0b01011, 0b10011}},
    {'-', {0, 0, 0, 0b01110, 0, 0, 0}},
    {'.', {0, 0, 0, 0, 0, 0b01100, 0b01100}},
    {'/', {0b00001, 0b00010, 0b00010, 0b00100, 0b01000, 0b01000, 0b10000}},
    {':', {0, 0b01100, 0b01100, 0, 0b01100, 0b01100, 0}},
    {'_', {0, 0, 0, 0, 0, 0, 0b11111}},
    {'+', {0, 0b00100, 0b00100, 0b11111, 0b00100, 0b00100, 0}},
    {'0', {0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110}},
    {'1', {0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110}},
    {'2', {0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111}},
    {'3', {0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110}},
    {'4', {0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010}},
    {'5', {0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110}},
    {'6', {0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110}},
    {'7', {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000}},
    {'8', {0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110}},
    {'9', {0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100}},
    {'A', {0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001}},
    {'B', {0b11110, 0b10001, 0b10001, 0b11110, 0b10001, 0b10001, 0b11110}},
    {'C', {0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110}},
    {'D', {0b11100, 0b10010, 0b10001, 0b10001, 0b10001, 0b10010, 0b11100}},
    {'E', {0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111}},
    {'F', {0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000}},
    {'G', {0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01111}},
    {'H', {0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001}},
    {'I', {0b01110, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110}},
    {'J', {0b00111, 0b00010, 0b00010, 0b00010, 0b00010, 0b10010, 0b01100}},
    {'K', {0b10001, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010, 0b10001}},
    {'L', {0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111}},
    {'M', {0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001}},
    {'N', {0b10001, 0b10001, 0b11001, 0b10101, 0b10011, 0b10001, 0b10001}},
    {'O', {0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110}},
    {'P', {0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000}},
    {'Q', {0b01110, 0b10001, 0b10001, 0b10001, 0b10101, 0b10010, 0b01101}},
    {'R', {0b11110, 0b10001, 0b10001, 0b11110, 0b10100, 0b10010, 0b10001}},
    {'S', {0b01111, 0b10000, 0b10000, 0b01110, 0b00001, 0b00001, 0b11110}},
    {'T', {0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100}},
    {'U', {0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110}},
    {'V', {0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01010, 0b00100}},
    {'W', {0b10001, 0b10001, 0b10001, 0b10101, 0b10101, 0b10101, 0b01010}},
    {'X', {0b10001, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001, 0b10001}},
    {'Y', {0b10001, 0b10001, 0b10001, 0b01010, 0b00100, 0b00100, 0b00100}},
    {'Z', {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0b11111}},
};

const Glyph* find_glyph(char c) {
    const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (const auto& g : kFont)
        if (g.ch == up) return &g;
    return nullptr;
}

} // namespace

Canvas::Canvas(int width, int height, Rgb bg) : w_(width), h_(height) {
    px_.resize(static_cast<std::size_t>(w_) * h_ * 3);
    for (int i = 0; i < w_ * h_; ++i) {
        px_[3 * i] = bg.r;
        px_[3 * i + 1] = bg.g;
        px_[3 * i + 2] = bg.b;
    }
}

void Canvas::set(int x, int y, Rgb c) {
    if (x < 0 || x >= w_ || y < 0 || y >= h_) return;
    const std::size_t i = (static_cast<std::size_t>(y) * w_ + x) * 3;
    px_[i] = c.r;
    px_[i + 1] = c.g;
    px_[i + 2] = c.b;
}

void Canvas::fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = std::max(0, y0); y <= std::min(h_ - 1, y1); ++y)
        for (int x = std::max(0, x0); x <= std::min(w_ - 1, x1); ++x) set(x, y, c);
}

void Canvas::line(int x0, int y0, int x1, int y1, Rgb c) {
    // Bresenham
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        set(x0, y0, c);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

void Canvas::text(int x, int y, const std::string& s, Rgb c, int scale) {
    int cx = x;
    for (char ch : s) {
        const Glyph* g = find_glyph(ch);
        if (g != nullptr) {
            for (int r = 0; r < 7; ++r)
                for (int col = 0; col < 5; ++col)
                    if (g->rows[r] & (1 << (4 - col)))
                        fill_rect(cx + col * scale, y + r * scale, cx + (col + 1) * scale - 1,
                                  y + (r + 1) * scale - 1, c);
        }
        cx += 6 * scale;
    }
}

int Canvas::text_width(const std::string& s, int scale) {
    return static_cast<int>(s.size()) * 6 * scale;
}

void Canvas::save_png(const std::string& path) const { write_png_rgb(path, w_, h_, px_); }

// ---------------------------------------------------------------------------
// charts

void line_chart(const std::string& path, const std::string& title, const std::string& x_label,
                const std::string& y_label, const std::vector<Series>& series, int width,
                int height) {
    Canvas cv(width, height);
    const Rgb black{0, 0, 0}, grey{200, 200, 200};
    const int ml = 64, mr = 16, mt = 28, mb = 44;
    const int px0 = ml, px1 = width - mr, py0 = mt, py1 = height - mb;

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (xmin > xmax) {
        xmin = 0;
        xmax = 1;
    }
    if (ymin > ymax) {
        ymin = 0;
        ymax = 1;
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) {
        ymax += 0.5;
        ymin -= 0.5;
    }
    const double ypad = 0.06 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto sx = [&](double x) { return px0 + static_cast<int>(std::lround((x - xmin) / (xmax - xmin) * (px1 - px0))); };
    auto sy = [&](double y) { return py1 - static_cast<int>(std::lround((y - ymin) / (ymax - ymin) * (py1 - py0))); };

    auto fmt = [](double v) {
        char buf[32];
        if (std::abs(v) >= 1000 || (std::abs(v) > 1e-12 && std::abs(v) < 0.01))
            std::snprintf(buf, sizeof(buf), "%.2g", v);
        else
            std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    };

    for (int t = 0; t <= 4; ++t) {
        const double yv = ymin + (ymax - ymin) * t / 4.0;
        const int y = sy(yv);
        cv.line(px0, y, px1, y, grey);
        const std::string lbl = fmt(yv);
        cv.text(px0 - 6 - Canvas::text_width(lbl), y - 3, lbl, black);
    }
    for (int t = 0; t <= 4; ++t) {
        const double xv = xmin + (xmax - xmin) * t / 4.0;
        const int x = sx(xv);
        cv.line(x, py1, x, py1 + 4, black);
        const std::string lbl = fmt(xv);
        cv.text(x - Canvas::text_width(lbl) / 2, py1 + 8, lbl, black);
    }
    cv.line(px0, py0, px0, py1, black);
    cv.line(px0, py1, px1, py1, black);

    cv.text((width - Canvas::text_width(title)) / 2, 8, title, black);
    cv.text((width - Canvas::text_width(x_label)) / 2, height - 16, x_label, black);
    cv.text(4, py0 - 14, y_label, black);

    int legend_y = py0 + 6;
    for (const auto& s : series) {
        for (std::size_t i = 0; i + 1 < s.x.size(); ++i)
            cv.line(sx(s.x[i]), sy(s.y[i]), sx(s.x[i + 1]), sy(s.y[i + 1]), s.color);
        for (std::size_t i = 0; i < s.x.size(); ++i)
            cv.fill_rect(sx(s.x[i]) - 2, sy(s.y[i]) - 2, sx(s.x[i]) + 2, sy(s.y[i]) + 2, s.color);
        if (!s.name.empty()) {
            cv.fill_rect(px0 + 10, legend_y, px0 + 26, legend_y + 2, s.color);
            cv.text(px0 + 32, legend_y - 3, s.name, black);
            legend_y += 14;
        }
    }
    cv.save_png(path);
}

void save_triptych(const std::string& path, const ImageGrid& image, const MaskGrid& pseudo,
                   const MaskGrid& target) {
    require_same_shape(image, pseudo, "save_triptych");
    require_same_shape(image, target, "save_triptych");
    const int h = image.rows(), w = image.cols(), gap = 4;
    ImageGrid panel(h, 3 * w + 2 * gap, 1.f);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            panel(r, c) = image(r, c);
            panel(r, w + gap + c) = pseudo(r, c) ? 1.f : 0.f;
            panel(r, 2 * (w + gap) + c) = target(r, c) ? 1.f : 0.f;
        }
    write_png_gray(path, panel);
}

} // namespace aslseg
