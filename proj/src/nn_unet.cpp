#include "aslseg/nn/unet.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

namespace aslseg::nn {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

// ---------------------------------------------------------------------------
// Conv

void Conv::configure(int in, int out, int ksize) {
    in_ch = in;
    out_ch = out;
    k = ksize;
    w.assign(static_cast<std::size_t>(out) * in * k * k, 0.f);
    b.assign(out, 0.f);
}

void Conv::init(Rng& rng) {
    // uniform fan-in scaling with relu gain, biases zero
    const double bound = std::sqrt(6.0 / (static_cast<double>(in_ch) * k * k));
    for (auto& x : w) x = static_cast<float>(rng.uniform(-bound, bound));
    std::fill(b.begin(), b.end(), 0.f);
}

namespace {

void im2col(const Tensor3& x, int k, std::vector<float>& col) {
    const int pad = k / 2;
    const int hw = x.h * x.w;
    const std::size_t kk = static_cast<std::size_t>(k) * k;
    col.resize(static_cast<std::size_t>(x.c) * kk * hw);
    for (int ci = 0; ci < x.c; ++ci) {
        const float* src = x.channel(ci);
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                float* dst = col.data() + ((ci * kk + ky * k + kx) * hw);
                const int dy = ky - pad, dx = kx - pad;
                const int r0 = std::max(0, -dy), r1 = std::min(x.h, x.h - dy);
                const int c0 = std::max(0, -dx), c1 = std::min(x.w, x.w - dx);
                // zero only the rows/columns padding leaves uncovered
                for (int r = 0; r < r0; ++r) std::fill(dst + r * x.w, dst + (r + 1) * x.w, 0.f);
                for (int r = r1; r < x.h; ++r) std::fill(dst + r * x.w, dst + (r + 1) * x.w, 0.f);
                for (int r = r0; r < r1; ++r) {
                    float* row = dst + r * x.w;
                    std::fill(row, row + c0, 0.f);
                    const float* s = src + (r + dy) * x.w + (c0 + dx);
                    std::copy(s, s + (c1 - c0), row + c0);
                    std::fill(row + c1, row + x.w, 0.f);
                }
            }
        }
    }
}

void col2im_add(const std::vector<float>& col, int k, Tensor3& dx) {
    const int pad = k / 2;
    const int hw = dx.h * dx.w;
    const std::size_t kk = static_cast<std::size_t>(k) * k;
    for (int ci = 0; ci < dx.c; ++ci) {
        float* dst = dx.channel(ci);
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const float* src = col.data() + ((ci * kk + ky * k + kx) * hw);
                const int dy = ky - pad, dx_ = kx - pad;
                const int r0 = std::max(0, -dy), r1 = std::min(dx.h, dx.h - dy);
                const int c0 = std::max(0, -dx_), c1 = std::min(dx.w, dx.w - dx_);
                for (int r = r0; r < r1; ++r) {
                    float* d = dst + (r + dy) * dx.w + (c0 + dx_);
                    const float* s = src + r * dx.w + c0;
                    for (int cc = 0; cc < c1 - c0; ++cc) d[cc] += s[cc];
                }
            }
        }
    }
}

} // namespace

void Conv::forward(const Tensor3& x, Tensor3& y, std::vector<float>& col_scratch) const {
    y = Tensor3(out_ch, x.h, x.w);
    const int hw = x.h * x.w;
    const int kdim = in_ch * k * k;
    const float* col_ptr;
    if (k == 1) {
        col_ptr = x.v.data(); // 1x1 conv: the input already is the column matrix
    } else {
        im2col(x, k, col_scratch);
        col_ptr = col_scratch.data();
    }
    ConstMapMat wm(w.data(), out_ch, kdim);
    ConstMapMat cm(col_ptr, kdim, hw);
    MapMat ym(y.v.data(), out_ch, hw);
    ym.noalias() = wm * cm;
    for (int o = 0; o < out_ch; ++o) ym.row(o).array() += b[o];
}

void Conv::backward(const Tensor3& x, const Tensor3& dy, Tensor3* dx, std::vector<float>& col_scratch,
                    std::vector<float>& gw, std::vector<float>& gb) const {
    const int hw = x.h * x.w;
    const int kdim = in_ch * k * k;
    const float* col_ptr;
    if (k == 1) {
        col_ptr = x.v.data();
    } else {
        im2col(x, k, col_scratch);
        col_ptr = col_scratch.data();
    }
    ConstMapMat dym(dy.v.data(), out_ch, hw);
    ConstMapMat cm(col_ptr, kdim, hw);
    MapMat gwm(gw.data(), out_ch, kdim);
    gwm.noalias() += dym * cm.transpose();
    for (int o = 0; o < out_ch; ++o) gb[o] += dym.row(o).sum();

    if (dx != nullptr) {
        *dx = Tensor3(in_ch, x.h, x.w);
        ConstMapMat wm(w.data(), out_ch, kdim);
        if (k == 1) {
            MapMat dxm(dx->v.data(), kdim, hw);
            dxm.noalias() = wm.transpose() * dym;
        } else {
            col_scratch.resize(static_cast<std::size_t>(kdim) * hw);
            MapMat dcm(col_scratch.data(), kdim, hw);
            dcm.noalias() = wm.transpose() * dym;
            col2im_add(col_scratch, k, *dx);
        }
    }
}

// ---------------------------------------------------------------------------
// elementwise ops

namespace {

void relu_inplace(Tensor3& t) {
    for (auto& v : t.v) v = v > 0.f ? v : 0.f;
}

// dz = dy where y > 0
Tensor3 relu_backward(const Tensor3& dy, const Tensor3& y) {
    Tensor3 dz = dy;
    for (std::size_t i = 0; i < dz.v.size(); ++i)
        if (y.v[i] <= 0.f) dz.v[i] = 0.f;
    return dz;
}

Tensor3 maxpool2(const Tensor3& x, std::vector<int>& argmax) {
    Tensor3 y(x.c, x.h / 2, x.w / 2);
    argmax.assign(y.v.size(), 0);
    std::size_t out_i = 0;
    for (int ci = 0; ci < x.c; ++ci) {
        const float* src = x.channel(ci);
        for (int r = 0; r < y.h; ++r) {
            for (int c = 0; c < y.w; ++c) {
                int best_idx = (2 * r) * x.w + 2 * c;
                float best = src[best_idx];
                const int cands[3] = {(2 * r) * x.w + 2 * c + 1, (2 * r + 1) * x.w + 2 * c,
                                      (2 * r + 1) * x.w + 2 * c + 1};
                for (int idx : cands)
                    if (src[idx] > best) {
                        best = src[idx];
                        best_idx = idx;
                    }
                y.v[out_i] = best;
                argmax[out_i] = best_idx;
                ++out_i;
            }
        }
    }
    return y;
}

Tensor3 maxpool2_backward(const Tensor3& dy, const std::vector<int>& argmax, int h_in, int w_in) {
    Tensor3 dx(dy.c, h_in, w_in);
    std::size_t i = 0;
    for (int ci = 0; ci < dy.c; ++ci) {
        float* dst = dx.channel(ci);
        const std::size_t n = dy.plane();
        for (std::size_t p = 0; p < n; ++p, ++i) dst[argmax[i]] += dy.v[i];
    }
    return dx;
}

Tensor3 upsample2(const Tensor3& x) {
    Tensor3 y(x.c, x.h * 2, x.w * 2);
    for (int ci = 0; ci < x.c; ++ci) {
        const float* src = x.channel(ci);
        float* dst = y.channel(ci);
        for (int r = 0; r < y.h; ++r) {
            const float* sr = src + (r / 2) * x.w;
            float* dr = dst + r * y.w;
            for (int c = 0; c < y.w; ++c) dr[c] = sr[c / 2];
        }
    }
    return y;
}

Tensor3 upsample2_backward(const Tensor3& dy) {
    Tensor3 dx(dy.c, dy.h / 2, dy.w / 2);
    for (int ci = 0; ci < dy.c; ++ci) {
        const float* src = dy.channel(ci);
        float* dst = dx.channel(ci);
        for (int r = 0; r < dy.h; ++r) {
            const float* sr = src + r * dy.w;
            float* dr = dst + (r / 2) * dx.w;
            for (int c = 0; c < dy.w; ++c) dr[c / 2] += sr[c];
        }
    }
    return dx;
}

Tensor3 concat(const Tensor3& a, const Tensor3& b) {
    Tensor3 y(a.c + b.c, a.h, a.w);
    std::copy(a.v.begin(), a.v.end(), y.v.begin());
    std::copy(b.v.begin(), b.v.end(), y.v.begin() + a.v.size());
    return y;
}

void split(const Tensor3& d, int c_first, Tensor3& da, Tensor3& db) {
    da = Tensor3(c_first, d.h, d.w);
    db = Tensor3(d.c - c_first, d.h, d.w);
    std::copy(d.v.begin(), d.v.begin() + da.v.size(), da.v.begin());
    std::copy(d.v.begin() + da.v.size(), d.v.end(), db.v.begin());
}

void dropout_inplace(Tensor3& t, float rate, std::uint64_t seed, std::vector<std::uint8_t>& keep) {
    keep.assign(t.v.size(), 1);
    Rng rng(seed);
    const float scale = 1.f / (1.f - rate);
    for (std::size_t i = 0; i < t.v.size(); ++i) {
        if (rng.uniform() < rate) {
            keep[i] = 0;
            t.v[i] = 0.f;
        } else {
            t.v[i] *= scale;
        }
    }
}

Tensor3 dropout_backward(const Tensor3& dy, const std::vector<std::uint8_t>& keep, float rate) {
    Tensor3 dx = dy;
    const float scale = 1.f / (1.f - rate);
    for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] = keep[i] ? dx.v[i] * scale : 0.f;
    return dx;
}

} // namespace

// ---------------------------------------------------------------------------
// UNet

int UNetConfig::channels_at(int level) const {
    long c = static_cast<long>(base_channels) << level;
    return static_cast<int>(std::min<long>(c, max_channels));
}

UNet::UNet(const UNetConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
    if (cfg.depth < 1) throw ConfigError("UNet: depth must be >= 1");
    if (cfg.base_channels < 1) throw ConfigError("UNet: base_channels must be >= 1");
    if (cfg.in_channels < 1) throw ConfigError("UNet: in_channels must be >= 1");
    if (cfg.dropout < 0.f || cfg.dropout >= 1.f) throw ConfigError("UNet: dropout must be in [0,1)");

    const int d = cfg.depth;
    enc1_.resize(d);
    enc2_.resize(d);
    up_.resize(d);
    dec1_.resize(d);
    dec2_.resize(d);
    for (int i = 0; i < d; ++i) {
        const int ci = cfg.channels_at(i);
        enc1_[i].configure(i == 0 ? cfg.in_channels : cfg.channels_at(i - 1), ci, 3);
        enc2_[i].configure(ci, ci, 3);
        up_[i].configure(cfg.channels_at(i + 1), ci, 3);
        dec1_[i].configure(2 * ci, ci, 3);
        dec2_[i].configure(ci, ci, 3);
    }
    bot1_.configure(cfg.channels_at(d - 1), cfg.channels_at(d), 3);
    bot2_.configure(cfg.channels_at(d), cfg.channels_at(d), 3);
    head_.configure(cfg.channels_at(0), 1, 1);

    Rng rng(derive_seed(init_seed, "unet.init"));
    for (Conv* c : conv_order()) c->init(rng);
}

std::vector<Conv*> UNet::conv_order() {
    std::vector<Conv*> order;
    for (int i = 0; i < cfg_.depth; ++i) {
        order.push_back(&enc1_[i]);
        order.push_back(&enc2_[i]);
    }
    order.push_back(&bot1_);
    order.push_back(&bot2_);
    for (int i = cfg_.depth - 1; i >= 0; --i) {
        order.push_back(&up_[i]);
        order.push_back(&dec1_[i]);
        order.push_back(&dec2_[i]);
    }
    order.push_back(&head_);
    return order;
}

std::vector<const Conv*> UNet::conv_order() const {
    auto mut = const_cast<UNet*>(this)->conv_order();
    return {mut.begin(), mut.end()};
}

std::size_t UNet::parameter_count() const {
    std::size_t n = 0;
    for (const Conv* c : conv_order()) n += c->weight_count();
    return n;
}

Grads UNet::make_grads() const {
    Grads g;
    for (const Conv* c : conv_order()) {
        g.gw.emplace_back(c->w.size(), 0.f);
        g.gb.emplace_back(c->b.size(), 0.f);
    }
    return g;
}

void Grads::zero() {
    for (auto& v : gw) std::fill(v.begin(), v.end(), 0.f);
    for (auto& v : gb) std::fill(v.begin(), v.end(), 0.f);
}

Tensor3 UNet::pad_input(const Tensor3& x, int& ph, int& pw) const {
    const int mult = 1 << cfg_.depth;
    ph = (x.h + mult - 1) / mult * mult;
    pw = (x.w + mult - 1) / mult * mult;
    if (ph == x.h && pw == x.w) return x;
    Tensor3 p(x.c, ph, pw);
    for (int ci = 0; ci < x.c; ++ci)
        for (int r = 0; r < x.h; ++r)
            std::copy(x.channel(ci) + r * x.w, x.channel(ci) + r * x.w + x.w,
                      p.channel(ci) + r * pw);
    return p;
}

ProbMapF UNet::forward_train(const Tensor3& x, std::uint64_t dropout_seed, Workspace& ws) const {
    return run_forward(x, dropout_seed, ws, /*stochastic=*/true);
}

ProbMapF UNet::predict(const Tensor3& x) const {
    Workspace ws;
    return run_forward(x, 0, ws, /*stochastic=*/false);
}

ProbMapF UNet::run_forward(const Tensor3& x, std::uint64_t dropout_seed, Workspace& ws,
                           bool stochastic) const {
    if (x.c != cfg_.in_channels) throw ValidationError("UNet: input channel count mismatch");
    const int d = cfg_.depth;
    ws.enc_x.resize(d);
    ws.enc_m.resize(d);
    ws.enc_y.resize(d);
    ws.pool_arg.resize(d);
    ws.up_in.resize(d);
    ws.up_out.resize(d);
    ws.upc_y.resize(d);
    ws.cat_x.resize(d);
    ws.dec_m.resize(d);
    ws.dec_y.resize(d);
    ws.dec_keep.resize(d);
    ws.in_h = x.h;
    ws.in_w = x.w;

    const bool drop = stochastic && cfg_.dropout > 0.f;
    Tensor3 cur = pad_input(x, ws.pad_h, ws.pad_w);

    for (int i = 0; i < d; ++i) {
        ws.enc_x[i] = std::move(cur);
        enc1_[i].forward(ws.enc_x[i], ws.enc_m[i], ws.col);
        relu_inplace(ws.enc_m[i]);
        enc2_[i].forward(ws.enc_m[i], ws.enc_y[i], ws.col);
        relu_inplace(ws.enc_y[i]);
        cur = maxpool2(ws.enc_y[i], ws.pool_arg[i]);
    }

    ws.bot_x = std::move(cur);
    bot1_.forward(ws.bot_x, ws.bot_m, ws.col);
    relu_inplace(ws.bot_m);
    bot2_.forward(ws.bot_m, ws.bot_y, ws.col);
    relu_inplace(ws.bot_y);
    cur = ws.bot_y;
    if (drop) dropout_inplace(cur, cfg_.dropout, derive_seed(dropout_seed, "dropout", 0), ws.bot_keep);

    for (int i = d - 1; i >= 0; --i) {
        ws.up_in[i] = std::move(cur);
        ws.up_out[i] = upsample2(ws.up_in[i]);
        up_[i].forward(ws.up_out[i], ws.upc_y[i], ws.col);
        relu_inplace(ws.upc_y[i]);
        ws.cat_x[i] = concat(ws.enc_y[i], ws.upc_y[i]);
        dec1_[i].forward(ws.cat_x[i], ws.dec_m[i], ws.col);
        relu_inplace(ws.dec_m[i]);
        dec2_[i].forward(ws.dec_m[i], ws.dec_y[i], ws.col);
        relu_inplace(ws.dec_y[i]);
        cur = ws.dec_y[i];
        if (drop)
            dropout_inplace(cur, cfg_.dropout, derive_seed(dropout_seed, "dropout", 1 + (d - 1 - i)),
                            ws.dec_keep[i]);
    }

    ws.head_x = std::move(cur);
    Tensor3 logits;
    head_.forward(ws.head_x, logits, ws.col);

    ws.prob = Tensor3(1, ws.pad_h, ws.pad_w);
    for (std::size_t i = 0; i < logits.v.size(); ++i)
        ws.prob.v[i] = 1.f / (1.f + std::exp(-logits.v[i]));

    ProbMapF out(ws.in_h, ws.in_w);
    for (int r = 0; r < ws.in_h; ++r)
        std::copy(ws.prob.v.data() + r * ws.pad_w, ws.prob.v.data() + r * ws.pad_w + ws.in_w,
                  out.data() + r * ws.in_w);
    return out;
}

void UNet::backward(const Array2D<float>& dprob, Workspace& ws, Grads& g) const {
    if (dprob.rows() != ws.in_h || dprob.cols() != ws.in_w)
        throw ValidationError("UNet::backward: gradient shape mismatch");
    const int d = cfg_.depth;
    const bool drop = cfg_.dropout > 0.f && !ws.bot_keep.empty();
    // fixed indices into conv_order(): enc1[i]=2i, enc2[i]=2i+1, then
    // bottleneck, then (up,dec1,dec2) per level from deepest, head last
    const std::size_t i_bot1 = 2 * d, i_bot2 = 2 * d + 1;
    const std::size_t i_head = 2 * d + 2 + 3 * d;
    auto dec_base = [&](int level) { return 2 * d + 2 + 3 * (d - 1 - level); };

    // sigmoid + crop backward
    Tensor3 dlogit(1, ws.pad_h, ws.pad_w);
    for (int r = 0; r < ws.in_h; ++r)
        for (int c = 0; c < ws.in_w; ++c) {
            const float p = ws.prob.v[r * ws.pad_w + c];
            dlogit.v[r * ws.pad_w + c] = dprob(r, c) * p * (1.f - p);
        }

    Tensor3 dcur;
    head_.backward(ws.head_x, dlogit, &dcur, ws.col, g.gw[i_head], g.gb[i_head]);

    std::vector<Tensor3> d_skip(d);
    for (int i = 0; i < d; ++i) {
        if (drop) dcur = dropout_backward(dcur, ws.dec_keep[i], cfg_.dropout);
        Tensor3 dz2 = relu_backward(dcur, ws.dec_y[i]);
        Tensor3 d_m;
        dec2_[i].backward(ws.dec_m[i], dz2, &d_m, ws.col, g.gw[dec_base(i) + 2], g.gb[dec_base(i) + 2]);
        Tensor3 dz1 = relu_backward(d_m, ws.dec_m[i]);
        Tensor3 d_cat;
        dec1_[i].backward(ws.cat_x[i], dz1, &d_cat, ws.col, g.gw[dec_base(i) + 1], g.gb[dec_base(i) + 1]);
        Tensor3 d_upc;
        split(d_cat, ws.enc_y[i].c, d_skip[i], d_upc);
        Tensor3 dz_up = relu_backward(d_upc, ws.upc_y[i]);
        Tensor3 d_upout;
        up_[i].backward(ws.up_out[i], dz_up, &d_upout, ws.col, g.gw[dec_base(i)], g.gb[dec_base(i)]);
        dcur = upsample2_backward(d_upout);
    }

    if (drop) dcur = dropout_backward(dcur, ws.bot_keep, cfg_.dropout);
    Tensor3 dz2 = relu_backward(dcur, ws.bot_y);
    Tensor3 d_m;
    bot2_.backward(ws.bot_m, dz2, &d_m, ws.col, g.gw[i_bot2], g.gb[i_bot2]);
    Tensor3 dz1 = relu_backward(d_m, ws.bot_m);
    Tensor3 d_pool;
    bot1_.backward(ws.bot_x, dz1, &d_pool, ws.col, g.gw[i_bot1], g.gb[i_bot1]);

    for (int i = d - 1; i >= 0; --i) {
        Tensor3 d_enc_y = maxpool2_backward(d_pool, ws.pool_arg[i], ws.enc_y[i].h, ws.enc_y[i].w);
        for (std::size_t j = 0; j < d_enc_y.v.size(); ++j) d_enc_y.v[j] += d_skip[i].v[j];
        Tensor3 dz_b = relu_backward(d_enc_y, ws.enc_y[i]);
        Tensor3 d_mm;
        enc2_[i].backward(ws.enc_m[i], dz_b, &d_mm, ws.col, g.gw[2 * i + 1], g.gb[2 * i + 1]);
        Tensor3 dz_a = relu_backward(d_mm, ws.enc_m[i]);
        enc1_[i].backward(ws.enc_x[i], dz_a, i > 0 ? &d_pool : nullptr, ws.col, g.gw[2 * i],
                          g.gb[2 * i]);
    }
}

// ---------------------------------------------------------------------------
// SGD

void Sgd::step(UNet& net, const Grads& g, double lr, double grad_scale) {
    auto order = net.conv_order();
    if (vw_.empty()) {
        for (const Conv* c : order) {
            vw_.emplace_back(c->w.size(), 0.f);
            vb_.emplace_back(c->b.size(), 0.f);
        }
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
        Conv* c = order[i];
        for (std::size_t j = 0; j < c->w.size(); ++j) {
            const float grad = static_cast<float>(grad_scale) * g.gw[i][j] +
                               static_cast<float>(weight_decay_) * c->w[j];
            vw_[i][j] = static_cast<float>(momentum_) * vw_[i][j] + grad;
            c->w[j] -= static_cast<float>(lr) * vw_[i][j];
        }
        for (std::size_t j = 0; j < c->b.size(); ++j) {
            const float grad = static_cast<float>(grad_scale) * g.gb[i][j];
            vb_[i][j] = static_cast<float>(momentum_) * vb_[i][j] + grad;
            c->b[j] -= static_cast<float>(lr) * vb_[i][j];
        }
    }
}

// ---------------------------------------------------------------------------
// input assembly

Tensor3 stack_channels(const ImageGrid& c0) {
    Tensor3 t(1, c0.rows(), c0.cols());
    std::copy(c0.raw().begin(), c0.raw().end(), t.v.begin());
    return t;
}

Tensor3 stack_channels(const ImageGrid& c0, const ImageGrid& c1) {
    require_same_shape(c0, c1, "stack_channels");
    Tensor3 t(2, c0.rows(), c0.cols());
    std::copy(c0.raw().begin(), c0.raw().end(), t.v.begin());
    std::copy(c1.raw().begin(), c1.raw().end(), t.v.begin() + c0.size());
    return t;
}

Tensor3 stack_channels(const ImageGrid& c0, const MaskGrid& c1) {
    require_same_shape(c0, c1, "stack_channels");
    Tensor3 t(2, c0.rows(), c0.cols());
    std::copy(c0.raw().begin(), c0.raw().end(), t.v.begin());
    float* dst = t.v.data() + c0.size();
    for (std::size_t i = 0; i < c1.size(); ++i) dst[i] = c1.raw()[i] ? 1.f : 0.f;
    return t;
}

} // namespace aslseg::nn
