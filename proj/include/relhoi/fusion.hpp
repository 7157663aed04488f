#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "relhoi/geometry.hpp"
#include "relhoi/tensor.hpp"

namespace relhoi {

// y_hat_l = y_tilde_l + alpha * sum of ternary rows assigned to pair l.
// Per-pair sums accumulate in float in triplet order. Pairs without
// triplets, and every pair when alpha == 0, are copied unchanged.
Tensor fuse_ternary(const Tensor& binary_logits, const Tensor& ternary_logits,
                    std::span<const std::size_t> pair_assignment, double alpha);

// y_hat' = y_hat + beta * y_dot; beta == 0 returns y_hat unchanged.
Tensor fuse_semantic(const Tensor& refined_logits, const Tensor& semantic_logits, double beta);

// Binary 0/1 label matrix aligned with the canonical pair order.
class LabelMatrix {
public:
    LabelMatrix(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> values);
    static LabelMatrix zeros(std::size_t rows, std::size_t cols);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool at(std::size_t r, std::size_t c) const { return values_[r * cols_ + c] != 0; }
    std::size_t positives() const;
    void set(std::size_t r, std::size_t c, bool on) { values_.at(r * cols_ + c) = on ? 1 : 0; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<std::uint8_t> values_;
};

// Per-entry sigmoid focal term and its derivative w.r.t. the logit.
double focal_term(double logit, bool positive, double gamma, double focal_alpha);
double focal_term_grad(double logit, bool positive, double gamma, double focal_alpha);

struct FocalLoss {
    double loss = 0;            // sum / max(1, positives)
    double unnormalized = 0;    // plain sum of focal terms
    std::size_t positives = 0;
    std::vector<double> grad;   // d loss / d logit, row-major [m x c]
};

FocalLoss focal_loss(const Tensor& logits, const LabelMatrix& labels, double gamma, double focal_alpha);

struct ScoredInteraction {
    PairIndex pair;
    Box human_box;
    Box object_box;
    int object_category = 0;
    std::vector<float> scores;  // one per action, in [0,1]
};

struct PairConfidence {
    float human = 1;
    float object = 1;
};

// s = (s_h * s_o)^lambda * sigmoid(logit), per action. [m x c]
Tensor final_scores(const Tensor& logits, std::span<const PairConfidence> confidences, double lambda);

}  // namespace relhoi
