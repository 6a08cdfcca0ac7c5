#pragma once

#include <string>

#include "aslseg/preprocess.hpp"

namespace aslseg {

// Minimal NIfTI-1 volume reader (.nii and .nii.gz, single-file "n+1" form).
// Handles the common scalar dtypes, byte-swapped files, and scl_slope /
// scl_inter rescaling. The volume id is the filename stem.
Volume load_nifti(const std::string& path);

bool is_nifti_name(const std::string& filename);

// "case_07.nii.gz" -> "case_07"
std::string nifti_stem(const std::string& filename);

} // namespace aslseg
