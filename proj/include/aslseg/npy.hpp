#pragma once

#include <string>

#include "aslseg/array2d.hpp"

namespace aslseg {

// Minimal NumPy .npy (format version 1.0) support for the two dtypes the
// corpus uses: float32 images ('<f4') and uint8 masks ('|u1'), 2D, C order.

void save_npy(const std::string& path, const Array2D<float>& arr);
void save_npy(const std::string& path, const Array2D<std::uint8_t>& arr);

Array2D<float> load_npy_f32(const std::string& path);
Array2D<std::uint8_t> load_npy_u8(const std::string& path);

} // namespace aslseg
