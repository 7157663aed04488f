#include "relhoi/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "relhoi/error.hpp"

namespace relhoi {

namespace {

constexpr const char* kModule = "fusion-scoring";

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid_d(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tensor fuse_ternary(const Tensor& binary_logits, const Tensor& ternary_logits,
                    std::span<const std::size_t> pair_assignment, double alpha) {
    const std::size_t m = binary_logits.rows(), c = binary_logits.cols();
    if (ternary_logits.rank() != 2 || ternary_logits.rows() != pair_assignment.size()) {
        fail(ErrorKind::Shape, kModule, "ternary logits not aligned with pair assignment");
    }
    if (ternary_logits.rows() > 0 && ternary_logits.cols() != c) {
        fail(ErrorKind::Shape, kModule, "ternary logits have a different class count");
    }
    for (std::size_t o = 0; o < pair_assignment.size(); ++o) {
        if (pair_assignment[o] >= m) {
            fail(ErrorKind::Index, kModule,
                 "triplet " + std::to_string(o) + " assigned to missing pair " + std::to_string(pair_assignment[o]));
        }
    }
    if (alpha == 0.0 || pair_assignment.empty()) return binary_logits;

    std::vector<float> sums(m * c, 0.0f);
    std::vector<bool> touched(m, false);
    for (std::size_t o = 0; o < pair_assignment.size(); ++o) {
        const std::size_t l = pair_assignment[o];
        touched[l] = true;
        const auto row = ternary_logits.row(o);
        for (std::size_t a = 0; a < c; ++a) sums[l * c + a] += row[a];
    }
    const float weight = static_cast<float>(alpha);
    std::vector<float> out(binary_logits.values().begin(), binary_logits.values().end());
    for (std::size_t l = 0; l < m; ++l) {
        if (!touched[l]) continue;
        for (std::size_t a = 0; a < c; ++a) out[l * c + a] += weight * sums[l * c + a];
    }
    return Tensor({m, c}, std::move(out));
}

Tensor fuse_semantic(const Tensor& refined_logits, const Tensor& semantic_logits, double beta) {
    if (refined_logits.dims() != semantic_logits.dims()) {
        fail(ErrorKind::Shape, kModule,
             "fuse_semantic " + dims_to_string(refined_logits.dims()) + " vs " + dims_to_string(semantic_logits.dims()));
    }
    if (beta == 0.0) return refined_logits;
    return ops::add(refined_logits, ops::scale(semantic_logits, static_cast<float>(beta)));
}

LabelMatrix::LabelMatrix(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) fail(ErrorKind::Shape, kModule, "label matrix size mismatch");
    for (auto v : values_)
        if (v > 1) fail(ErrorKind::Validation, kModule, "labels must be 0 or 1");
}

LabelMatrix LabelMatrix::zeros(std::size_t rows, std::size_t cols) {
    return LabelMatrix(rows, cols, std::vector<std::uint8_t>(rows * cols, 0));
}

std::size_t LabelMatrix::positives() const {
    return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

double focal_term(double x, bool positive, double gamma, double focal_alpha) {
    const double p = sigmoid_d(x);
    if (positive) {
        // -alpha (1-p)^gamma log p, with log p = -softplus(-x)
        return focal_alpha * std::pow(1.0 - p, gamma) * softplus(-x);
    }
    // -(1-alpha) p^gamma log(1-p), with log(1-p) = -softplus(x)
    return (1.0 - focal_alpha) * std::pow(p, gamma) * softplus(x);
}

double focal_term_grad(double x, bool positive, double gamma, double focal_alpha) {
    const double p = sigmoid_d(x);
    const double q = 1.0 - p;
    if (positive) {
        // alpha (1-p)^gamma [gamma p log p - (1-p)]
        return focal_alpha * std::pow(q, gamma) * (-gamma * p * softplus(-x) - q);
    }
    // (1-alpha) p^gamma [p - gamma (1-p) log(1-p)]
    return (1.0 - focal_alpha) * std::pow(p, gamma) * (p + gamma * q * softplus(x));
}

FocalLoss focal_loss(const Tensor& logits, const LabelMatrix& labels, double gamma, double focal_alpha) {
    if (logits.rank() != 2 || logits.rows() != labels.rows() || logits.cols() != labels.cols()) {
        fail(ErrorKind::Shape, kModule, "labels do not match logits " + dims_to_string(logits.dims()));
    }
    FocalLoss out;
    out.positives = labels.positives();
    const double norm = static_cast<double>(std::max<std::size_t>(1, out.positives));
    const std::size_t m = logits.rows(), c = logits.cols();
    out.grad.resize(m * c);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t a = 0; a < c; ++a) {
            const double x = logits.at(i, a);
            const bool y = labels.at(i, a);
            out.unnormalized += focal_term(x, y, gamma, focal_alpha);
            out.grad[i * c + a] = focal_term_grad(x, y, gamma, focal_alpha) / norm;
        }
    }
    out.loss = out.unnormalized / norm;
    return out;
}

Tensor final_scores(const Tensor& logits, std::span<const PairConfidence> confidences, double lambda) {
    if (logits.rank() != 2 || logits.rows() != confidences.size()) {
        fail(ErrorKind::Shape, kModule, "one confidence pair per logit row required");
    }
    if (!(lambda > 0)) fail(ErrorKind::Config, kModule, "lambda must be > 0");
    const std::size_t m = logits.rows(), c = logits.cols();
    std::vector<float> out(m * c);
    for (std::size_t i = 0; i < m; ++i) {
        const auto [sh, so] = confidences[i];
        if (!(sh >= 0 && sh <= 1 && so >= 0 && so <= 1)) {
            fail(ErrorKind::Validation, kModule, "detection confidences must lie in [0,1]");
        }
        const double prior = std::pow(static_cast<double>(sh) * so, lambda);
        for (std::size_t a = 0; a < c; ++a) {
            out[i * c + a] = static_cast<float>(prior * sigmoid_d(logits.at(i, a)));
        }
    }
    return Tensor({m, c}, std::move(out));
}

}  // namespace relhoi
