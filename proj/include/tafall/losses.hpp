#pragma once

#include <optional>
#include <span>
#include <vector>

namespace tafall {

struct LossWeights {
    double lambda = 1.0;       // balance term in the multi-task loss
    double lambda_b = 0.5;     // balance term in the pretraining loss
    double lambda_ctr = 0.1;   // contrastive term in the pretraining loss
    double tau = 0.1;          // contrastive temperature

    void validate() const;
};

// -[ y ln p + (1-y) ln(1-p) ] with p clamped into (eps, 1-eps), eps = 1e-12.
double binary_cross_entropy(double p_hat, int y);

// Mean squared error over pairs where both series are defined; undefined
// entries are excluded pairwise. Throws when lengths differ or no pair is
// defined.
double balance_mse(std::span<const std::optional<double>> pred,
                   std::span<const std::optional<double>> truth);

double balance_mse(std::span<const double> pred, std::span<const double> truth);

// cls + lambda * bal
double multitask_loss(double cls, double bal, double lambda);

// Cosine similarity with a 1e-12 norm floor; throws on zero-norm vectors.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// -log( exp(sim(z1,z2)/tau) / sum_k exp(sim(z1,z_k)/tau) ) over the candidate
// set {z2} + negatives.
double infonce(std::span<const double> z1, std::span<const double> z2,
               const std::vector<std::vector<double>>& negatives, double tau);

// cls + lambda_b * bal + lambda_ctr * ctr
double pretrain_loss(double cls, double bal, double ctr, const LossWeights& weights);

}  // namespace tafall
