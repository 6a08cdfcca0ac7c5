#include "aslseg/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "aslseg/rng.hpp"

namespace aslseg {

void PerturbConfig::validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(apply_probability) || !prob(all_black_probability))
        throw ValidationError("PerturbConfig: probabilities must lie in [0,1]");
    if (noise_blobs_min < 1 || noise_blobs_max < noise_blobs_min)
        throw ValidationError("PerturbConfig: bad noise blob count range");
    if (noise_radius_min <= 0 || noise_radius_max < noise_radius_min)
        throw ValidationError("PerturbConfig: bad noise radius range");
    if (occlude_fraction_min <= 0 || occlude_fraction_max < occlude_fraction_min ||
        occlude_fraction_max > 1.0)
        throw ValidationError("PerturbConfig: bad occlusion fraction range");
    if (elastic_amplitude < 0 || elastic_sigma <= 0)
        throw ValidationError("PerturbConfig: bad elastic parameters");
    if (morph_radius_min < 1 || morph_radius_max < morph_radius_min)
        throw ValidationError("PerturbConfig: bad morphology radius range");
}

Mask add_background_noise(const Mask& mask, const PerturbConfig& cfg, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "perturb.noise"));
    Mask out = mask;
    const int h = mask.rows(), w = mask.cols();

    std::vector<int> background;
    for (int i = 0; i < h * w; ++i)
        if (!mask.data.raw()[i]) background.push_back(i);
    if (background.empty()) return out;

    const int blobs = static_cast<int>(rng.uniform_int(cfg.noise_blobs_min, cfg.noise_blobs_max));
    for (int bi = 0; bi < blobs; ++bi) {
        const int center = background[rng.index(background.size())];
        const double cy = center / w, cx = center % w;
        const double ry = rng.uniform(cfg.noise_radius_min, cfg.noise_radius_max);
        const double rx = rng.uniform(cfg.noise_radius_min, cfg.noise_radius_max);
        const double rot = rng.uniform(0.0, M_PI);
        const double ca = std::cos(rot), sa = std::sin(rot);
        const int reach = static_cast<int>(std::ceil(std::max(ry, rx)));
        for (int r = std::max(0, (int)cy - reach); r <= std::min(h - 1, (int)cy + reach); ++r)
            for (int c = std::max(0, (int)cx - reach); c <= std::min(w - 1, (int)cx + reach); ++c) {
                const double dy = r - cy, dx = c - cx;
                const double px = (dx * ca + dy * sa) / rx;
                const double py = (-dx * sa + dy * ca) / ry;
                if (px * px + py * py <= 1.0) out(r, c) = 1;
            }
    }
    return out;
}

Mask occlude_fraction(const Mask& mask, double fraction, std::uint64_t seed) {
    if (mask.empty_mask()) return mask;
    Rng rng(derive_seed(seed, "perturb.occlude"));
    const int h = mask.rows(), w = mask.cols();

    std::vector<int> fg;
    for (int i = 0; i < h * w; ++i)
        if (mask.data.raw()[i]) fg.push_back(i);

    const std::size_t target = static_cast<std::size_t>(std::floor(fraction * fg.size()));
    Mask out = mask;
    if (target == 0) return out;

    // grow a contiguous patch over foreground from a random seed pixel
    std::vector<std::uint8_t> visited(h * w, 0);
    std::deque<int> frontier;
    const int start = fg[rng.index(fg.size())];
    frontier.push_back(start);
    visited[start] = 1;
    std::size_t removed = 0;
    while (!frontier.empty() && removed < target) {
        const int cur = frontier.front();
        frontier.pop_front();
        out.data.raw()[cur] = 0;
        ++removed;
        const int r = cur / w, c = cur % w;
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
                if (dr == 0 && dc == 0) continue;
                const int rr = r + dr, cc = c + dc;
                if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
                const int idx = rr * w + cc;
                if (!visited[idx] && mask.data.raw()[idx]) {
                    visited[idx] = 1;
                    frontier.push_back(idx);
                }
            }
    }
    return out;
}

Mask occlude_foreground(const Mask& mask, const PerturbConfig& cfg, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "perturb.occlude_frac"));
    const double fraction = rng.uniform(cfg.occlude_fraction_min, cfg.occlude_fraction_max);
    return occlude_fraction(mask, fraction, seed);
}

namespace {

void gaussian_smooth(Array2D<float>& field, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<float> kernel(2 * radius + 1);
    float ksum = 0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = static_cast<float>(std::exp(-0.5 * (i * i) / (sigma * sigma)));
        ksum += kernel[i + radius];
    }
    for (auto& k : kernel) k /= ksum;

    const int h = field.rows(), w = field.cols();
    Array2D<float> tmp(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            float acc = 0;
            for (int i = -radius; i <= radius; ++i) {
                const int cc = std::clamp(c + i, 0, w - 1);
                acc += kernel[i + radius] * field(r, cc);
            }
            tmp(r, c) = acc;
        }
    for (int c = 0; c < w; ++c)
        for (int r = 0; r < h; ++r) {
            float acc = 0;
            for (int i = -radius; i <= radius; ++i) {
                const int rr = std::clamp(r + i, 0, h - 1);
                acc += kernel[i + radius] * tmp(rr, c);
            }
            field(r, c) = acc;
        }
}

} // namespace

Mask elastic_deform(const Mask& mask, const PerturbConfig& cfg, std::uint64_t seed) {
    if (cfg.elastic_amplitude == 0.0) return mask;
    Rng rng(derive_seed(seed, "perturb.elastic"));
    const int h = mask.rows(), w = mask.cols();

    Array2D<float> dy(h, w), dx(h, w);
    for (std::size_t i = 0; i < dy.size(); ++i) dy.raw()[i] = static_cast<float>(rng.uniform(-1, 1));
    for (std::size_t i = 0; i < dx.size(); ++i) dx.raw()[i] = static_cast<float>(rng.uniform(-1, 1));
    gaussian_smooth(dy, cfg.elastic_sigma);
    gaussian_smooth(dx, cfg.elastic_sigma);

    float peak = 1e-9f;
    for (std::size_t i = 0; i < dy.size(); ++i)
        peak = std::max({peak, std::abs(dy.raw()[i]), std::abs(dx.raw()[i])});
    const float scale = static_cast<float>(cfg.elastic_amplitude) / peak;

    Mask out(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const float sr = r + scale * dy(r, c);
            const float sc = c + scale * dx(r, c);
            // bilinear sample of the binary mask, outside = background
            const int r0 = static_cast<int>(std::floor(sr)), c0 = static_cast<int>(std::floor(sc));
            const float fr = sr - r0, fc = sc - c0;
            auto at = [&](int rr, int cc) -> float {
                if (rr < 0 || rr >= h || cc < 0 || cc >= w) return 0.f;
                return mask(rr, cc) ? 1.f : 0.f;
            };
            const float v = (1 - fr) * ((1 - fc) * at(r0, c0) + fc * at(r0, c0 + 1)) +
                            fr * ((1 - fc) * at(r0 + 1, c0) + fc * at(r0 + 1, c0 + 1));
            out(r, c) = v > 0.5f ? 1 : 0;
        }
    return out;
}

namespace {

std::vector<std::pair<int, int>> disc_offsets(int radius) {
    std::vector<std::pair<int, int>> offs;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dy * dy + dx * dx <= radius * radius) offs.emplace_back(dy, dx);
    return offs;
}

} // namespace

Mask dilate(const Mask& mask, int radius) {
    if (radius < 1) return mask;
    const auto offs = disc_offsets(radius);
    const int h = mask.rows(), w = mask.cols();
    Mask out(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            if (!mask(r, c)) continue;
            for (auto [dy, dx] : offs) {
                const int rr = r + dy, cc = c + dx;
                if (rr >= 0 && rr < h && cc >= 0 && cc < w) out(rr, cc) = 1;
            }
        }
    return out;
}

Mask erode(const Mask& mask, int radius) {
    if (radius < 1) return mask;
    const auto offs = disc_offsets(radius);
    const int h = mask.rows(), w = mask.cols();
    Mask out(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            if (!mask(r, c)) continue;
            bool keep = true;
            for (auto [dy, dx] : offs) {
                const int rr = r + dy, cc = c + dx;
                if (rr < 0 || rr >= h || cc < 0 || cc >= w || !mask(rr, cc)) {
                    keep = false;
                    break;
                }
            }
            out(r, c) = keep ? 1 : 0;
        }
    return out;
}

Mask perturb(const Mask& mask, const PerturbConfig& cfg, std::uint64_t seed, PerturbTrace* trace) {
    cfg.validate();
    Rng rng(derive_seed(seed, "perturb.fire"));
    PerturbTrace t;

    if (rng.uniform() < cfg.all_black_probability) {
        t.all_black = true;
        if (trace != nullptr) *trace = t;
        return Mask(mask.rows(), mask.cols());
    }

    t.noise = rng.uniform() < cfg.apply_probability;
    t.occlude = rng.uniform() < cfg.apply_probability;
    t.elastic = rng.uniform() < cfg.apply_probability;
    t.dilate = rng.uniform() < cfg.apply_probability;
    t.erode = rng.uniform() < cfg.apply_probability;

    Mask out = mask;
    if (t.noise) out = add_background_noise(out, cfg, derive_seed(seed, "op", 0));
    if (t.occlude) out = occlude_foreground(out, cfg, derive_seed(seed, "op", 1));
    if (t.elastic) out = elastic_deform(out, cfg, derive_seed(seed, "op", 2));
    Rng radius_rng(derive_seed(seed, "perturb.radius"));
    if (t.dilate)
        out = dilate(out, static_cast<int>(radius_rng.uniform_int(cfg.morph_radius_min, cfg.morph_radius_max)));
    if (t.erode)
        out = erode(out, static_cast<int>(radius_rng.uniform_int(cfg.morph_radius_min, cfg.morph_radius_max)));

    if (trace != nullptr) *trace = t;
    return out;
}

std::vector<SyntheticSample> build_adaptation_training_set(
    const std::vector<std::pair<Slice, Mask>>& labeled, int replication, const PerturbConfig& cfg,
    std::uint64_t seed) {
    if (labeled.empty())
        throw ValidationError("build_adaptation_training_set: empty labeled list");
    if (replication < 1)
        throw ValidationError("build_adaptation_training_set: replication must be >= 1");

    std::vector<SyntheticSample> out;
    out.reserve(labeled.size() * static_cast<std::size_t>(replication));
    std::uint64_t k = 0;
    for (int rep = 0; rep < replication; ++rep) {
        for (const auto& [slice, gt] : labeled) {
            require_same_shape(slice.image, gt.data, "build_adaptation_training_set");
            SyntheticSample s;
            s.slice_id = slice.id;
            s.image = slice.image;
            s.pseudo = perturb(gt, cfg, derive_seed(seed, "adapt_sample", k)).data;
            s.target = gt;
            out.push_back(std::move(s));
            ++k;
        }
    }
    return out;
}

} // namespace aslseg
