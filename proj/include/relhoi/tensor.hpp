#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace relhoi {

using Dims = std::vector<std::size_t>;

std::string dims_to_string(const Dims& dims);

// Dense row-major float32 tensor. Every value is finite; construction rejects
// NaN/Inf. Zero-extent dimensions are allowed so that empty pair/triplet sets
// have a well-defined [0 x D] shape.
class Tensor {
public:
    Tensor() = default;
    Tensor(Dims dims, std::vector<float> data);

    static Tensor zeros(Dims dims);
    static Tensor filled(Dims dims, float value);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<float> data);
    static Tensor matrix(std::initializer_list<std::initializer_list<float>> rows);
    static Tensor vector(std::vector<float> data);

    const Dims& dims() const noexcept { return dims_; }
    std::size_t rank() const noexcept { return dims_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    // Matrix view accessors; valid for rank-2 tensors only.
    std::size_t rows() const;
    std::size_t cols() const;
    float at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    std::span<const float> row(std::size_t r) const;

    std::span<const float> values() const noexcept { return data_; }
    float operator[](std::size_t i) const { return data_[i]; }

    // Same data reinterpreted under new dims with equal element count.
    Tensor reshaped(Dims dims) const;

    bool bitwise_equal(const Tensor& other) const noexcept;

private:
    Dims dims_;
    std::vector<float> data_;
};

// Affine layer y = x W + b with W stored [in x out].
struct Linear {
    Tensor weight;
    Tensor bias;

    std::size_t in_features() const { return weight.rows(); }
    std::size_t out_features() const { return weight.cols(); }
};

// Two linear layers with ReLU in between; hidden width is 2x output width.
struct Mlp {
    Linear first;
    Linear second;
};

namespace ops {

// Accumulates in double, rounds once per output element.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor softmax_rows(const Tensor& x);

inline constexpr float kLayerNormEps = 1e-5f;
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps = kLayerNormEps);

Tensor linear(const Tensor& x, const Linear& layer);
Tensor mlp(const Tensor& x, const Mlp& layers);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
float sigmoid(float x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float factor);

// Row/column plumbing. None of these broadcast implicitly.
Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> indices);
Tensor repeat_row(const Tensor& row_vector, std::size_t times);
Tensor mean_rows(const Tensor& a);

}  // namespace ops

// Convenience constructors for layers with explicit shapes.
Linear make_linear(Tensor weight, Tensor bias);
Linear zero_linear(std::size_t in, std::size_t out);
Mlp zero_mlp(std::size_t in, std::size_t out);
inline std::size_t mlp_hidden_width(std::size_t out) { return 2 * out; }

}  // namespace relhoi
