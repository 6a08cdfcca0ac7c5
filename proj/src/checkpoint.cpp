#include "aslseg/nn/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace aslseg::nn {

namespace {
const char kMagic[] = "ASLSEG_CKPT v1\n";
}

void save_checkpoint(const std::string& path, const UNet& net, const CheckpointInfo& info) {
    const UNetConfig& c = net.config();
    nlohmann::json header;
    header["schema_version"] = 1;
    header["kind"] = info.kind;
    header["init_seed"] = info.init_seed;
    header["unet"] = {{"in_channels", c.in_channels},
                      {"depth", c.depth},
                      {"base_channels", c.base_channels},
                      {"max_channels", c.max_channels},
                      {"dropout", c.dropout}};
    auto tensors = nlohmann::json::array();
    int li = 0;
    for (const Conv* conv : net.conv_order()) {
        tensors.push_back({{"name", "conv" + std::to_string(li) + ".w"}, {"count", conv->w.size()}});
        tensors.push_back({{"name", "conv" + std::to_string(li) + ".b"}, {"count", conv->b.size()}});
        ++li;
    }
    header["tensors"] = tensors;

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write checkpoint " + path);
    f << kMagic << header.dump() << '\n';
    for (const Conv* conv : net.conv_order()) {
        f.write(reinterpret_cast<const char*>(conv->w.data()),
                static_cast<std::streamsize>(conv->w.size() * sizeof(float)));
        f.write(reinterpret_cast<const char*>(conv->b.data()),
                static_cast<std::streamsize>(conv->b.size() * sizeof(float)));
    }
    if (!f) throw IoError("short write to checkpoint " + path);
}

UNet load_checkpoint(const std::string& path, const std::string& expect_kind,
                     int expect_in_channels, CheckpointInfo* info) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint " + path);

    std::string magic(sizeof(kMagic) - 1, '\0');
    f.read(magic.data(), static_cast<std::streamsize>(magic.size()));
    if (!f || magic != kMagic) throw IoError(path + ": not a checkpoint file");

    std::string header_line;
    std::getline(f, header_line);
    nlohmann::json header = nlohmann::json::parse(header_line);
    if (header.at("schema_version").get<int>() != 1)
        throw IoError(path + ": unsupported checkpoint schema");

    const std::string kind = header.at("kind").get<std::string>();
    if (!expect_kind.empty() && kind != expect_kind)
        throw ValidationError(path + ": checkpoint kind '" + kind + "' does not match expected '" +
                              expect_kind + "'");

    UNetConfig cfg;
    const auto& u = header.at("unet");
    cfg.in_channels = u.at("in_channels").get<int>();
    cfg.depth = u.at("depth").get<int>();
    cfg.base_channels = u.at("base_channels").get<int>();
    cfg.max_channels = u.at("max_channels").get<int>();
    cfg.dropout = u.at("dropout").get<float>();
    if (expect_in_channels >= 0 && cfg.in_channels != expect_in_channels)
        throw ValidationError(path + ": checkpoint expects " + std::to_string(cfg.in_channels) +
                              " input channels, role requires " + std::to_string(expect_in_channels));

    UNet net(cfg, 0);
    for (Conv* conv : net.conv_order()) {
        f.read(reinterpret_cast<char*>(conv->w.data()),
               static_cast<std::streamsize>(conv->w.size() * sizeof(float)));
        f.read(reinterpret_cast<char*>(conv->b.data()),
               static_cast<std::streamsize>(conv->b.size() * sizeof(float)));
    }
    if (!f) throw IoError(path + ": truncated checkpoint");

    if (info != nullptr) {
        info->kind = kind;
        info->init_seed = header.at("init_seed").get<std::uint64_t>();
    }
    return net;
}

} // namespace aslseg::nn
