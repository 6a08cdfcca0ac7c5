#include "aslseg/nifti.hpp"

#include <cstring>
#include <filesystem>
#include <vector>

#include <zlib.h>

#include "aslseg/errors.hpp"

namespace aslseg {

namespace {

template <typename T>
T swap_bytes(T v) {
    char* p = reinterpret_cast<char*>(&v);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(p[i], p[sizeof(T) - 1 - i]);
    return v;
}

struct GzFile {
    gzFile f = nullptr;
    explicit GzFile(const std::string& path) : f(gzopen(path.c_str(), "rb")) {}
    ~GzFile() {
        if (f) gzclose(f);
    }
    void read(void* dst, std::size_t n, const std::string& path) {
        if (gzread(f, dst, static_cast<unsigned>(n)) != static_cast<int>(n))
            throw IoError(path + ": truncated NIfTI file");
    }
};

// the header fields we need, at their NIfTI-1 byte offsets
struct Header {
    std::int32_t sizeof_hdr;  // 0
    std::int16_t dim[8];      // 40
    std::int16_t datatype;    // 70
    std::int16_t bitpix;      // 72
    float vox_offset;         // 108
    float scl_slope;          // 112
    float scl_inter;          // 116
    char magic[4];            // 344
};

template <typename T>
void read_typed(GzFile& gz, Volume& vol, std::size_t n, bool swap, const std::string& path) {
    std::vector<T> buf(n);
    gz.read(buf.data(), n * sizeof(T), path);
    for (std::size_t i = 0; i < n; ++i) {
        T v = swap ? swap_bytes(buf[i]) : buf[i];
        vol.data[i] = static_cast<float>(v);
    }
}

} // namespace

bool is_nifti_name(const std::string& filename) {
    return filename.ends_with(".nii") || filename.ends_with(".nii.gz");
}

std::string nifti_stem(const std::string& filename) {
    std::string name = std::filesystem::path(filename).filename().string();
    if (name.ends_with(".nii.gz")) return name.substr(0, name.size() - 7);
    if (name.ends_with(".nii")) return name.substr(0, name.size() - 4);
    return name;
}

Volume load_nifti(const std::string& path) {
    GzFile gz(path);
    if (!gz.f) throw IoError("cannot open " + path);

    std::vector<char> raw(348);
    gz.read(raw.data(), raw.size(), path);

    Header h{};
    std::memcpy(&h.sizeof_hdr, raw.data() + 0, 4);
    std::memcpy(h.dim, raw.data() + 40, 16);
    std::memcpy(&h.datatype, raw.data() + 70, 2);
    std::memcpy(&h.bitpix, raw.data() + 72, 2);
    std::memcpy(&h.vox_offset, raw.data() + 108, 4);
    std::memcpy(&h.scl_slope, raw.data() + 112, 4);
    std::memcpy(&h.scl_inter, raw.data() + 116, 4);
    std::memcpy(h.magic, raw.data() + 344, 4);

    bool swap = false;
    if (h.sizeof_hdr != 348) {
        if (swap_bytes(h.sizeof_hdr) != 348) throw IoError(path + ": not a NIfTI-1 file");
        swap = true;
        for (auto& d : h.dim) d = swap_bytes(d);
        h.datatype = swap_bytes(h.datatype);
        h.bitpix = swap_bytes(h.bitpix);
        h.vox_offset = swap_bytes(h.vox_offset);
        h.scl_slope = swap_bytes(h.scl_slope);
        h.scl_inter = swap_bytes(h.scl_inter);
    }
    if (std::strncmp(h.magic, "n+1", 3) != 0 && std::strncmp(h.magic, "ni1", 3) != 0)
        throw IoError(path + ": missing NIfTI magic");
    if (std::strncmp(h.magic, "ni1", 3) == 0)
        throw IoError(path + ": two-file NIfTI (.hdr/.img) is not supported");

    const int ndim = h.dim[0];
    if (ndim < 2 || ndim > 4) throw IoError(path + ": unsupported dimensionality " + std::to_string(ndim));
    const int nx = h.dim[1], ny = h.dim[2];
    const int nz = ndim >= 3 ? h.dim[3] : 1;
    if (ndim == 4 && h.dim[4] > 1) throw IoError(path + ": 4D volumes with multiple frames not supported");
    if (nx <= 0 || ny <= 0 || nz <= 0) throw IoError(path + ": bad dimensions");

    // skip the extension area up to vox_offset
    long data_at = static_cast<long>(h.vox_offset);
    if (data_at < 348) data_at = 352;
    std::vector<char> skip(static_cast<std::size_t>(data_at) - 348);
    if (!skip.empty()) gz.read(skip.data(), skip.size(), path);

    Volume vol(nifti_stem(path), nz, ny, nx);
    const std::size_t n = vol.data.size();
    switch (h.datatype) {
        case 2: read_typed<std::uint8_t>(gz, vol, n, swap, path); break;
        case 4: read_typed<std::int16_t>(gz, vol, n, swap, path); break;
        case 8: read_typed<std::int32_t>(gz, vol, n, swap, path); break;
        case 16: read_typed<float>(gz, vol, n, swap, path); break;
        case 64: read_typed<double>(gz, vol, n, swap, path); break;
        case 256: read_typed<std::int8_t>(gz, vol, n, swap, path); break;
        case 512: read_typed<std::uint16_t>(gz, vol, n, swap, path); break;
        default:
            throw IoError(path + ": unsupported NIfTI datatype " + std::to_string(h.datatype));
    }

    if (h.scl_slope != 0.f && !(h.scl_slope == 1.f && h.scl_inter == 0.f)) {
        for (auto& v : vol.data) v = v * h.scl_slope + h.scl_inter;
    }
    return vol;
}

} // namespace aslseg
