#pragma once

#include "aslseg/types.hpp"

namespace aslseg {

// Per-pixel foreground probabilities. Losses run in double so analytic
// gradients survive finite-difference scrutiny; models hand over float maps
// and convert at the boundary.
using ProbMap = Array2D<double>;
using ProbMapF = Array2D<float>;

inline ProbMap to_prob_map(const ProbMapF& p) { return p.cast<double>(); }
inline ProbMapF to_prob_map_f(const ProbMap& p) { return p.cast<float>(); }

// Numerical-stability constants, fixed project-wide.
inline constexpr double kProbEps = 1e-7;    // probability clamp [eps, 1-eps]
inline constexpr double kDiceSmooth = 1.0;  // dice smoothing in numerator and denominator

struct LossWeights {
    double lambda_u = 1.0; // unsupervised consistency weight
    double alpha = 1.0;    // two-pass KL weight inside the supervised loss
    double gamma = 1.0;    // cross-entropy weight inside the adaptation loss
};

void validate_weights(const LossWeights& w);

// Mean binary cross entropy of pred against a 0/1 target, pred clamped to
// [eps, 1-eps]. If grad is non-null it receives dLoss/dPred (same shape).
double cross_entropy(const ProbMap& pred, const Mask& target, ProbMap* grad = nullptr);

// Soft dice loss 1 - (2*sum(p*t)+s) / (sum(p)+sum(t)+s).
double dice_loss(const ProbMap& pred, const Mask& target, ProbMap* grad = nullptr);

// Mean over pixels of (KL(p||q)+KL(q||p))/2 on per-pixel (p,1-p) vs (q,1-q)
// distributions; exactly symmetric under argument swap.
double symmetric_kl(const ProbMap& p, const ProbMap& q, ProbMap* grad_p = nullptr,
                    ProbMap* grad_q = nullptr);

// Two-pass supervised loss: CE(pred1,t) + CE(pred2,t) + alpha * SKL(pred1,pred2).
double rdrop_supervised_loss(const ProbMap& pred1, const ProbMap& pred2, const Mask& target,
                             const LossWeights& w, ProbMap* grad1 = nullptr,
                             ProbMap* grad2 = nullptr);

// Total objective: labeled_term + lambda_u * unlabeled_term.
double total_ssl_loss(double labeled_term, double unlabeled_term, const LossWeights& w);

// Refiner objective: dice(pred,t) + gamma * CE(pred,t).
double adaptation_loss(const ProbMap& pred, const Mask& target, const LossWeights& w,
                       ProbMap* grad = nullptr);

// Linear warm-up of the consistency weight over the first tenth of training.
double scheduled_lambda(double lambda_max, long step, long total_steps);

// Polynomial decay lr * (1 - t/T)^power.
double poly_lr(double base_lr, long step, long total_steps, double power = 0.9);

// Fixed project-wide binarization: foreground iff p > 0.5.
Mask threshold_prob(const ProbMapF& prob, float threshold = 0.5f);

} // namespace aslseg
