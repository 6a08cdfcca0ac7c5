#include "aslseg/losses.hpp"

#include <algorithm>
#include <cmath>

namespace aslseg {

namespace {

inline double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }
inline bool clamped(double p) { return p <= kProbEps || p >= 1.0 - kProbEps; }

} // namespace

void validate_weights(const LossWeights& w) {
    auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!ok(w.lambda_u) || !ok(w.alpha) || !ok(w.gamma))
        throw ValidationError("LossWeights: lambda_u/alpha/gamma must be finite and non-negative");
}

double cross_entropy(const ProbMap& pred, const Mask& target, ProbMap* grad) {
    require_same_shape(pred, target.data, "cross_entropy");
    const std::size_t n = pred.size();
    if (n == 0) throw ValidationError("cross_entropy: empty input");
    if (grad != nullptr) *grad = ProbMap(pred.rows(), pred.cols(), 0.0);

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = clamp_prob(pred.raw()[i]);
        const double t = target.data.raw()[i] ? 1.0 : 0.0;
        sum += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
        if (grad != nullptr && !clamped(pred.raw()[i]))
            grad->raw()[i] = (-t / p + (1.0 - t) / (1.0 - p)) / static_cast<double>(n);
    }
    return sum / static_cast<double>(n);
}

double dice_loss(const ProbMap& pred, const Mask& target, ProbMap* grad) {
    require_same_shape(pred, target.data, "dice_loss");
    const std::size_t n = pred.size();
    if (n == 0) throw ValidationError("dice_loss: empty input");

    double inter = 0.0, psum = 0.0, tsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = pred.raw()[i];
        const double t = target.data.raw()[i] ? 1.0 : 0.0;
        inter += p * t;
        psum += p;
        tsum += t;
    }
    const double num = 2.0 * inter + kDiceSmooth;
    const double den = psum + tsum + kDiceSmooth;
    if (grad != nullptr) {
        *grad = ProbMap(pred.rows(), pred.cols(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = target.data.raw()[i] ? 1.0 : 0.0;
            grad->raw()[i] = -(2.0 * t * den - num) / (den * den);
        }
    }
    return 1.0 - num / den;
}

double symmetric_kl(const ProbMap& p, const ProbMap& q, ProbMap* grad_p, ProbMap* grad_q) {
    require_same_shape(p, q, "symmetric_kl");
    const std::size_t n = p.size();
    if (n == 0) throw ValidationError("symmetric_kl: empty input");
    if (grad_p != nullptr) *grad_p = ProbMap(p.rows(), p.cols(), 0.0);
    if (grad_q != nullptr) *grad_q = ProbMap(q.rows(), q.cols(), 0.0);

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = clamp_prob(p.raw()[i]);
        const double b = clamp_prob(q.raw()[i]);
        const double log_ratio_fg = std::log(a) - std::log(b);
        const double log_ratio_bg = std::log(1.0 - a) - std::log(1.0 - b);
        // 0.5*(KL(a||b) + KL(b||a)); identical inputs hit exactly 0
        sum += 0.5 * ((a - b) * log_ratio_fg + ((1.0 - a) - (1.0 - b)) * log_ratio_bg);
        if (grad_p != nullptr && !clamped(p.raw()[i]))
            grad_p->raw()[i] = 0.5 *
                               (log_ratio_fg - log_ratio_bg - b / a + (1.0 - b) / (1.0 - a)) /
                               static_cast<double>(n);
        if (grad_q != nullptr && !clamped(q.raw()[i]))
            grad_q->raw()[i] = 0.5 *
                               (-log_ratio_fg + log_ratio_bg - a / b + (1.0 - a) / (1.0 - b)) /
                               static_cast<double>(n);
    }
    return sum / static_cast<double>(n);
}

double rdrop_supervised_loss(const ProbMap& pred1, const ProbMap& pred2, const Mask& target,
                             const LossWeights& w, ProbMap* grad1, ProbMap* grad2) {
    validate_weights(w);
    ProbMap ce_g1, ce_g2, kl_g1, kl_g2;
    const bool want1 = grad1 != nullptr, want2 = grad2 != nullptr;

    double loss = cross_entropy(pred1, target, want1 ? &ce_g1 : nullptr);
    loss += cross_entropy(pred2, target, want2 ? &ce_g2 : nullptr);
    loss += w.alpha * symmetric_kl(pred1, pred2, want1 ? &kl_g1 : nullptr, want2 ? &kl_g2 : nullptr);

    if (want1) {
        *grad1 = std::move(ce_g1);
        for (std::size_t i = 0; i < grad1->size(); ++i) grad1->raw()[i] += w.alpha * kl_g1.raw()[i];
    }
    if (want2) {
        *grad2 = std::move(ce_g2);
        for (std::size_t i = 0; i < grad2->size(); ++i) grad2->raw()[i] += w.alpha * kl_g2.raw()[i];
    }
    return loss;
}

double total_ssl_loss(double labeled_term, double unlabeled_term, const LossWeights& w) {
    validate_weights(w);
    return labeled_term + w.lambda_u * unlabeled_term;
}

double adaptation_loss(const ProbMap& pred, const Mask& target, const LossWeights& w, ProbMap* grad) {
    validate_weights(w);
    ProbMap dice_g, ce_g;
    const bool want = grad != nullptr;
    double loss = dice_loss(pred, target, want ? &dice_g : nullptr);
    loss += w.gamma * cross_entropy(pred, target, want ? &ce_g : nullptr);
    if (want) {
        *grad = std::move(dice_g);
        for (std::size_t i = 0; i < grad->size(); ++i) grad->raw()[i] += w.gamma * ce_g.raw()[i];
    }
    return loss;
}

double scheduled_lambda(double lambda_max, long step, long total_steps) {
    if (total_steps <= 0) return lambda_max;
    const long warmup = std::max(1L, total_steps / 10);
    if (step >= warmup) return lambda_max;
    return lambda_max * static_cast<double>(step) / static_cast<double>(warmup);
}

double poly_lr(double base_lr, long step, long total_steps, double power) {
    if (total_steps <= 0) return base_lr;
    double t = std::clamp(static_cast<double>(step) / static_cast<double>(total_steps), 0.0, 1.0);
    return base_lr * std::pow(1.0 - t, power);
}

Mask threshold_prob(const ProbMapF& prob, float threshold) {
    Mask out(prob.rows(), prob.cols());
    for (std::size_t i = 0; i < prob.size(); ++i)
        out.data.raw()[i] = prob.raw()[i] > threshold ? 1 : 0;
    return out;
}

} // namespace aslseg
