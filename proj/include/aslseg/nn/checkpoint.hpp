#pragma once

#include <cstdint>
#include <string>

#include "aslseg/nn/unet.hpp"

namespace aslseg::nn {

// Self-describing checkpoint: a magic line, a JSON header (schema version,
// model kind, backbone config, seed state, tensor manifest), then the raw
// little-endian float32 parameters in conv_order().

struct CheckpointInfo {
    std::string kind; // "segmenter" | "promptable" | "adapter"
    std::uint64_t init_seed = 0;
};

void save_checkpoint(const std::string& path, const UNet& net, const CheckpointInfo& info);

// Reads header + weights. expect_in_channels >= 0 enforces the input-channel
// contract of the loading role; mismatch is an error.
UNet load_checkpoint(const std::string& path, const std::string& expect_kind,
                     int expect_in_channels, CheckpointInfo* info = nullptr);

} // namespace aslseg::nn
