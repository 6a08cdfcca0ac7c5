#include "aslseg/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aslseg {

Volume clip_and_normalize(const Volume& volume, float window_lo, float window_hi) {
    if (!(window_lo < window_hi))
        throw ValidationError("clip_and_normalize: window_lo must be < window_hi");
    Volume out(volume.id, volume.nz, volume.ny, volume.nx);
    const float span = window_hi - window_lo;
    for (std::size_t i = 0; i < volume.data.size(); ++i) {
        float v = volume.data[i];
        if (!std::isfinite(v)) {
            std::size_t plane = static_cast<std::size_t>(volume.ny) * volume.nx;
            std::size_t z = i / plane;
            std::size_t rem = i % plane;
            throw ValidationError("clip_and_normalize: non-finite voxel at (z=" + std::to_string(z) +
                                  ", y=" + std::to_string(rem / volume.nx) +
                                  ", x=" + std::to_string(rem % volume.nx) + ")");
        }
        v = std::clamp(v, window_lo, window_hi);
        out.data[i] = (v - window_lo) / span;
    }
    return out;
}

std::vector<std::pair<Slice, std::optional<Mask>>> volume_to_slices(const Volume& volume,
                                                                    const Volume* masks) {
    if (masks != nullptr &&
        (masks->nz != volume.nz || masks->ny != volume.ny || masks->nx != volume.nx)) {
        throw ValidationError("volume_to_slices: image/label volume shape mismatch");
    }
    std::vector<std::pair<Slice, std::optional<Mask>>> out;
    out.reserve(volume.nz);
    for (int z = 0; z < volume.nz; ++z) {
        Slice s;
        s.id = volume.id + "_z" + std::to_string(z);
        s.image = ImageGrid(volume.ny, volume.nx);
        for (int y = 0; y < volume.ny; ++y)
            for (int x = 0; x < volume.nx; ++x) s.image(y, x) = volume.at(z, y, x);

        std::optional<Mask> m;
        if (masks != nullptr) {
            Mask mk(volume.ny, volume.nx);
            for (int y = 0; y < volume.ny; ++y)
                for (int x = 0; x < volume.nx; ++x)
                    mk(y, x) = masks->at(z, y, x) != 0.f ? 1 : 0;
            s.has_tumor = !mk.empty_mask();
            m = std::move(mk);
        }
        out.emplace_back(std::move(s), std::move(m));
    }
    return out;
}

namespace {

int uf_find(std::vector<int>& parent, int i) {
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

void uf_union(std::vector<int>& parent, int a, int b) {
    a = uf_find(parent, a);
    b = uf_find(parent, b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
}

} // namespace

std::pair<Array2D<int>, std::vector<std::size_t>> connected_components(const MaskGrid& mask) {
    const int h = mask.rows(), w = mask.cols();
    Array2D<int> labels(h, w, 0);
    std::vector<int> parent{0}; // parent[0] unused (background)

    // two-pass union-find, 8-connectivity
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (!mask(r, c)) continue;
            int best = 0;
            auto consider = [&](int rr, int cc) {
                if (rr < 0 || cc < 0 || cc >= w) return;
                int l = labels(rr, cc);
                if (l == 0) return;
                if (best == 0) {
                    best = l;
                } else if (l != best) {
                    uf_union(parent, best, l);
                    best = std::min(best, l);
                }
            };
            consider(r - 1, c - 1);
            consider(r - 1, c);
            consider(r - 1, c + 1);
            consider(r, c - 1);
            if (best == 0) {
                best = static_cast<int>(parent.size());
                parent.push_back(best);
            }
            labels(r, c) = best;
        }
    }

    // compress labels to 1..K and count pixels
    std::vector<int> remap(parent.size(), 0);
    int next = 0;
    for (int i = 1; i < static_cast<int>(parent.size()); ++i)
        if (uf_find(parent, i) == i) remap[i] = ++next;

    std::vector<std::size_t> counts(next, 0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (!labels(r, c)) continue;
            int l = remap[uf_find(parent, labels(r, c))];
            labels(r, c) = l;
            ++counts[l - 1];
        }
    }
    return {std::move(labels), std::move(counts)};
}

Mask filter_small_tumors(const Mask& mask, std::size_t min_pixels) {
    auto [labels, counts] = connected_components(mask.data);
    Mask out(mask.rows(), mask.cols());
    for (int r = 0; r < mask.rows(); ++r)
        for (int c = 0; c < mask.cols(); ++c) {
            int l = labels(r, c);
            out(r, c) = (l != 0 && counts[l - 1] >= min_pixels) ? 1 : 0;
        }
    return out;
}

} // namespace aslseg
