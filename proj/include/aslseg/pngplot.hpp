#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aslseg/types.hpp"

namespace aslseg {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
};

// Small RGB raster with the primitives the report plots need.
class Canvas {
public:
    Canvas(int width, int height, Rgb background = {255, 255, 255});

    int width() const { return w_; }
    int height() const { return h_; }

    void set(int x, int y, Rgb c);
    void fill_rect(int x0, int y0, int x1, int y1, Rgb c);
    void line(int x0, int y0, int x1, int y1, Rgb c);
    // 5x7 bitmap font (digits, upper-case letters, basic punctuation);
    // lower-case input is upcased
    void text(int x, int y, const std::string& s, Rgb c, int scale = 1);
    static int text_width(const std::string& s, int scale = 1);

    void save_png(const std::string& path) const;

private:
    int w_, h_;
    std::vector<std::uint8_t> px_;
};

void write_png_rgb(const std::string& path, int width, int height,
                   const std::vector<std::uint8_t>& rgb);

// grayscale helpers (values clamped to [0,1])
void write_png_gray(const std::string& path, const ImageGrid& img);

struct Series {
    std::string name;
    std::vector<double> x, y;
    Rgb color;
};

void line_chart(const std::string& path, const std::string& title, const std::string& x_label,
                const std::string& y_label, const std::vector<Series>& series, int width = 720,
                int height = 440);

// Side-by-side panels (image, corrupted pseudo-label, clean target) for
// visual audit of the perturbation pipeline.
void save_triptych(const std::string& path, const ImageGrid& image, const MaskGrid& pseudo,
                   const MaskGrid& target);

} // namespace aslseg
