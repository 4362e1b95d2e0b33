#include "tafall/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tafall {

namespace {
constexpr double kClampEps = 1e-12;
constexpr double kNormFloor = 1e-12;
}  // namespace

void LossWeights::validate() const {
    if (lambda < 0.0 || lambda_b < 0.0 || lambda_ctr < 0.0)
        throw std::invalid_argument("loss weights must be non-negative");
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
}

double binary_cross_entropy(double p_hat, int y) {
    if (y != 0 && y != 1) throw std::invalid_argument("binary_cross_entropy: label must be 0 or 1");
    const double p = std::clamp(p_hat, kClampEps, 1.0 - kClampEps);
    return -(y * std::log(p) + (1 - y) * std::log(1.0 - p));
}

double balance_mse(std::span<const std::optional<double>> pred,
                   std::span<const std::optional<double>> truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("balance_mse: length mismatch");
    double acc = 0.0;
    size_t defined = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        if (!pred[i] || !truth[i]) continue;
        const double d = *pred[i] - *truth[i];
        acc += d * d;
        ++defined;
    }
    if (defined == 0) throw std::invalid_argument("balance_mse: no defined frame pairs");
    return acc / static_cast<double>(defined);
}

double balance_mse(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("balance_mse: length mismatch");
    if (pred.empty()) throw std::invalid_argument("balance_mse: empty series");
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

double multitask_loss(double cls, double bal, double lambda) {
    if (!std::isfinite(cls) || !std::isfinite(bal))
        throw std::invalid_argument("multitask_loss: non-finite component");
    return cls + lambda * bal;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("cosine_similarity: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine_similarity: zero-norm vector");
    return dot / std::max(std::sqrt(na) * std::sqrt(nb), kNormFloor);
}

double infonce(std::span<const double> z1, std::span<const double> z2,
               const std::vector<std::vector<double>>& negatives, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("infonce: tau must be positive");

    const double pos = cosine_similarity(z1, z2) / tau;
    // log-sum-exp over the candidate set {z2} + negatives
    double max_term = pos;
    std::vector<double> terms{pos};
    terms.reserve(negatives.size() + 1);
    for (const auto& zk : negatives) {
        const double s = cosine_similarity(z1, zk) / tau;
        terms.push_back(s);
        max_term = std::max(max_term, s);
    }
    double denom = 0.0;
    for (double t : terms) denom += std::exp(t - max_term);
    return -(pos - max_term - std::log(denom));
}

double pretrain_loss(double cls, double bal, double ctr, const LossWeights& weights) {
    weights.validate();
    if (!std::isfinite(cls) || !std::isfinite(bal) || !std::isfinite(ctr))
        throw std::invalid_argument("pretrain_loss: non-finite component");
    return cls + weights.lambda_b * bal + weights.lambda_ctr * ctr;
}

}  // namespace tafall
