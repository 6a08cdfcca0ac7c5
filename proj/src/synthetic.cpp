#include "aslseg/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "aslseg/rng.hpp"

namespace aslseg {

namespace {

struct Blob {
    double cy, cx;     // center
    double a, b;       // semi-axes
    double rot;        // orientation
    double wobble;     // boundary modulation amplitude
    int lobes;         // boundary modulation frequency
    double phase;
    double amp;        // additive brightness at center
};

// Elliptical distance with a wobbled boundary; <= 1 is inside the blob.
double blob_u(const Blob& t, int r, int c) {
    double dy = r - t.cy, dx = c - t.cx;
    double ca = std::cos(t.rot), sa = std::sin(t.rot);
    double px = (dx * ca + dy * sa) / t.a;
    double py = (-dx * sa + dy * ca) / t.b;
    double e = std::sqrt(px * px + py * py);
    double theta = std::atan2(dy, dx);
    double ring = 1.0 + t.wobble * std::sin(t.lobes * theta + t.phase);
    return e / std::max(ring, 0.4);
}

double outer_radius(const Blob& t) { return std::max(t.a, t.b) * (1.0 + t.wobble) * 1.15 + 1.0; }

// Brightness profile: 1 at center, 0.55 at the mask boundary, then a fast
// soft tail to 0 so the edge is not a hard step. The 0.55 floor keeps every
// mask pixel clearly above local background.
double falloff(double u) {
    if (u <= 1.0) return 1.0 - 0.45 * u * u;
    if (u <= 1.15) return 0.55 * (1.0 - (u - 1.0) / 0.15);
    return 0.0;
}

Blob sample_blob(Rng& rng, int h, int w, double min_r, double max_r, double min_amp, double max_amp) {
    Blob t;
    double r0 = rng.uniform(min_r, max_r);
    double squash = rng.uniform(0.65, 1.0);
    t.a = r0;
    t.b = r0 * squash;
    t.rot = rng.uniform(0.0, M_PI);
    t.wobble = rng.uniform(0.05, 0.25);
    t.lobes = static_cast<int>(rng.uniform_int(2, 5));
    t.phase = rng.uniform(0.0, 2.0 * M_PI);
    t.amp = rng.uniform(min_amp, max_amp);
    double margin = outer_radius(t) + 1.0;
    margin = std::min(margin, std::min(h, w) / 2.0 - 1.0);
    t.cy = rng.uniform(margin, h - 1 - margin);
    t.cx = rng.uniform(margin, w - 1 - margin);
    return t;
}

void paint_blob(ImageGrid& img, MaskGrid* mask, const Blob& t) {
    int r0 = std::max(0, static_cast<int>(std::floor(t.cy - outer_radius(t))));
    int r1 = std::min(img.rows() - 1, static_cast<int>(std::ceil(t.cy + outer_radius(t))));
    int c0 = std::max(0, static_cast<int>(std::floor(t.cx - outer_radius(t))));
    int c1 = std::min(img.cols() - 1, static_cast<int>(std::ceil(t.cx + outer_radius(t))));
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            double u = blob_u(t, r, c);
            double f = falloff(u);
            if (f <= 0.0) continue;
            img(r, c) += static_cast<float>(t.amp * f);
            if (mask != nullptr && u <= 1.0) (*mask)(r, c) = 1;
        }
    }
}

} // namespace

std::vector<std::pair<Slice, Mask>> generate_synthetic_corpus(int n_slices, int height, int width,
                                                              std::uint64_t seed,
                                                              const SynthConfig& cfg) {
    if (n_slices < 1) throw ValidationError("generate_synthetic_corpus: n_slices must be >= 1");
    if (height < 16 || width < 16)
        throw ValidationError("generate_synthetic_corpus: minimum size is 16x16");

    // pick exactly round(frac * n) tumor-free slices, spread by shuffle
    std::vector<int> order(n_slices);
    for (int i = 0; i < n_slices; ++i) order[i] = i;
    Rng pick(derive_seed(seed, "synth.tumor_free"));
    pick.shuffle(order);
    int n_free = static_cast<int>(std::lround(cfg.tumor_free_fraction * n_slices));
    std::vector<bool> tumor_free(n_slices, false);
    for (int i = 0; i < n_free; ++i) tumor_free[order[i]] = true;

    const double max_r = std::max(cfg.min_radius + 1.0, cfg.max_radius_fraction * std::min(height, width));

    std::vector<std::pair<Slice, Mask>> corpus;
    corpus.reserve(n_slices);
    int id_width = static_cast<int>(std::to_string(n_slices - 1).size());

    for (int i = 0; i < n_slices; ++i) {
        Rng rng(derive_seed(seed, "synth.slice", static_cast<std::uint64_t>(i)));

        // smooth background: plane gradient plus two low-frequency waves
        double base = rng.uniform(0.18, 0.32);
        double gy = rng.uniform(-0.06, 0.06), gx = rng.uniform(-0.06, 0.06);
        double f1 = rng.uniform(0.5, 1.5), f2 = rng.uniform(0.5, 1.5);
        double p1 = rng.uniform(0.0, 2 * M_PI), p2 = rng.uniform(0.0, 2 * M_PI);
        double a1 = rng.uniform(0.02, 0.06), a2 = rng.uniform(0.02, 0.06);

        ImageGrid img(height, width);
        for (int r = 0; r < height; ++r) {
            for (int c = 0; c < width; ++c) {
                double y = static_cast<double>(r) / height, x = static_cast<double>(c) / width;
                double v = base + gy * y + gx * x +
                           a1 * std::sin(2 * M_PI * f1 * y + p1) +
                           a2 * std::sin(2 * M_PI * f2 * x + p2);
                img(r, c) = static_cast<float>(v);
            }
        }

        Mask mask(height, width);
        std::vector<Blob> tumors;
        if (!tumor_free[i]) {
            int n_tumors = static_cast<int>(rng.uniform_int(1, cfg.max_tumors));
            for (int t = 0; t < n_tumors; ++t) {
                for (int attempt = 0; attempt < 50; ++attempt) {
                    Blob cand = sample_blob(rng, height, width, cfg.min_radius, max_r,
                                            cfg.min_contrast, cfg.max_contrast);
                    bool clear = true;
                    for (const auto& other : tumors) {
                        double d = std::hypot(cand.cy - other.cy, cand.cx - other.cx);
                        if (d < outer_radius(cand) + outer_radius(other) + 4.0) { clear = false; break; }
                    }
                    if (clear) { tumors.push_back(cand); break; }
                }
            }
            // a slice flagged as tumorous must carry at least one lesion
            if (tumors.empty())
                tumors.push_back(sample_blob(rng, height, width, cfg.min_radius, max_r,
                                             cfg.min_contrast, cfg.max_contrast));
        }

        // dim distractor blobs, kept far from every lesion
        int n_distract = static_cast<int>(rng.uniform_int(0, cfg.max_distractors));
        for (int d = 0; d < n_distract; ++d) {
            for (int attempt = 0; attempt < 50; ++attempt) {
                Blob cand = sample_blob(rng, height, width, cfg.min_radius, max_r, 0.03, 0.06);
                bool clear = true;
                for (const auto& t : tumors) {
                    double dist = std::hypot(cand.cy - t.cy, cand.cx - t.cx);
                    if (dist < outer_radius(cand) + outer_radius(t) + 10.0) { clear = false; break; }
                }
                if (clear) { paint_blob(img, nullptr, cand); break; }
            }
        }

        for (const auto& t : tumors) paint_blob(img, &mask, t);

        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c) {
                double v = img(r, c) + cfg.noise_sigma * rng.normal();
                img(r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }

        Slice s;
        std::string num = std::to_string(i);
        s.id = "synth_" + std::string(id_width - num.size(), '0') + num;
        s.image = std::move(img);
        s.has_tumor = !tumor_free[i] && count_foreground(mask) > 0;
        corpus.emplace_back(std::move(s), Mask(std::move(mask)));
    }
    return corpus;
}

} // namespace aslseg
