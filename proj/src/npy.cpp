#include "aslseg/npy.hpp"

#include <cstring>
#include <fstream>

#include "aslseg/errors.hpp"

namespace aslseg {

namespace {

const char kMagic[] = "\x93NUMPY";

void write_npy(const std::string& path, const char* descr, const void* data,
               std::size_t elem_size, int rows, int cols) {
    std::string header = std::string("{'descr': '") + descr +
                         "', 'fortran_order': False, 'shape': (" + std::to_string(rows) + ", " +
                         std::to_string(cols) + "), }";
    // pad so magic(6) + version(2) + len(2) + header is a multiple of 64
    std::size_t unpadded = 10 + header.size() + 1;
    std::size_t padded = (unpadded + 63) / 64 * 64;
    header.append(padded - unpadded, ' ');
    header.push_back('\n');

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f.write(kMagic, 6);
    const unsigned char version[2] = {1, 0};
    f.write(reinterpret_cast<const char*>(version), 2);
    const std::uint16_t hlen = static_cast<std::uint16_t>(header.size());
    f.write(reinterpret_cast<const char*>(&hlen), 2);
    f.write(header.data(), static_cast<std::streamsize>(header.size()));
    f.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(elem_size * rows * cols));
    if (!f) throw IoError("short write to " + path);
}

struct NpyHeader {
    std::string descr;
    int rows = 0, cols = 0;
};

NpyHeader read_header(std::ifstream& f, const std::string& path) {
    char magic[6];
    unsigned char version[2];
    f.read(magic, 6);
    f.read(reinterpret_cast<char*>(version), 2);
    if (!f || std::memcmp(magic, kMagic, 6) != 0)
        throw IoError(path + ": not a .npy file");
    std::uint32_t hlen = 0;
    if (version[0] == 1) {
        std::uint16_t h16 = 0;
        f.read(reinterpret_cast<char*>(&h16), 2);
        hlen = h16;
    } else {
        f.read(reinterpret_cast<char*>(&hlen), 4);
    }
    std::string header(hlen, '\0');
    f.read(header.data(), hlen);
    if (!f) throw IoError(path + ": truncated header");

    NpyHeader out;
    auto find_str = [&](const char* key) {
        auto pos = header.find(key);
        if (pos == std::string::npos) throw IoError(path + ": header missing " + key);
        return pos + std::strlen(key);
    };
    auto d0 = header.find('\'', find_str("'descr':"));
    auto d1 = header.find('\'', d0 + 1);
    out.descr = header.substr(d0 + 1, d1 - d0 - 1);

    if (header.find("'fortran_order': False") == std::string::npos)
        throw IoError(path + ": only C-order arrays supported");

    auto s0 = header.find('(', find_str("'shape':"));
    auto s1 = header.find(')', s0);
    std::string shape = header.substr(s0 + 1, s1 - s0 - 1);
    int dims[2] = {0, 0};
    int nd = 0;
    std::size_t pos = 0;
    while (pos < shape.size() && nd < 3) {
        while (pos < shape.size() && !isdigit(static_cast<unsigned char>(shape[pos]))) ++pos;
        if (pos >= shape.size()) break;
        std::size_t end = pos;
        while (end < shape.size() && isdigit(static_cast<unsigned char>(shape[end]))) ++end;
        if (nd < 2) dims[nd] = std::stoi(shape.substr(pos, end - pos));
        ++nd;
        pos = end;
    }
    if (nd != 2) throw IoError(path + ": expected a 2D array, got " + std::to_string(nd) + "D");
    out.rows = dims[0];
    out.cols = dims[1];
    return out;
}

} // namespace

void save_npy(const std::string& path, const Array2D<float>& arr) {
    write_npy(path, "<f4", arr.data(), sizeof(float), arr.rows(), arr.cols());
}

void save_npy(const std::string& path, const Array2D<std::uint8_t>& arr) {
    write_npy(path, "|u1", arr.data(), sizeof(std::uint8_t), arr.rows(), arr.cols());
}

Array2D<float> load_npy_f32(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    NpyHeader h = read_header(f, path);
    Array2D<float> out(h.rows, h.cols);
    if (h.descr == "<f4") {
        f.read(reinterpret_cast<char*>(out.data()),
               static_cast<std::streamsize>(sizeof(float) * out.size()));
    } else if (h.descr == "<f8") {
        std::vector<double> tmp(out.size());
        f.read(reinterpret_cast<char*>(tmp.data()),
               static_cast<std::streamsize>(sizeof(double) * tmp.size()));
        for (std::size_t i = 0; i < tmp.size(); ++i) out.raw()[i] = static_cast<float>(tmp[i]);
    } else {
        throw IoError(path + ": unsupported dtype " + h.descr + " (expected <f4)");
    }
    if (!f) throw IoError(path + ": truncated data");
    return out;
}

Array2D<std::uint8_t> load_npy_u8(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    NpyHeader h = read_header(f, path);
    if (h.descr != "|u1" && h.descr != "|b1")
        throw IoError(path + ": unsupported dtype " + h.descr + " (expected |u1)");
    Array2D<std::uint8_t> out(h.rows, h.cols);
    f.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError(path + ": truncated data");
    return out;
}

} // namespace aslseg
