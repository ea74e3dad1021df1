#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "typoflow/errors.hpp"
#include "typoflow/rng.hpp"

namespace typoflow {

enum class DType : uint8_t { F32, F64 };

struct TensorNode {
    std::vector<int64_t> shape;
    DType dtype = DType::F32;
    bool requires_grad = false;
    std::vector<float> f32;
    std::vector<double> f64;
    std::vector<float> grad;  // same length as f32 once allocated

    int64_t numel() const {
        int64_t n = 1;
        for (int64_t e : shape) n *= e;
        return n;
    }
};

// Value-semantic handle to a shared dense array. Training math is f32; the
// f64 side exists only for the gradient-check oracle's re-evaluation.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int64_t> shape, DType dt = DType::F32);
    static Tensor full(std::vector<int64_t> shape, float value);
    static Tensor from(std::vector<int64_t> shape, std::vector<float> data);
    static Tensor scalar(float value);
    static Tensor randn(std::vector<int64_t> shape, Rng& rng, float stddev = 1.f);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int64_t>& shape() const { return node_->shape; }
    int64_t numel() const { return node_->numel(); }
    int rank() const { return static_cast<int>(node_->shape.size()); }
    int64_t dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
    DType dtype() const { return node_->dtype; }

    std::span<const float> data() const;
    std::span<float> data_mut();
    std::span<const double> data64() const;
    std::span<double> data64_mut();

    float item() const;
    double item_as_double() const;
    float at(std::initializer_list<int64_t> idx) const;

    bool requires_grad() const { return node_->requires_grad; }
    Tensor& set_requires_grad(bool v);

    bool has_grad() const { return !node_->grad.empty(); }
    std::span<const float> grad() const;
    std::span<float> grad_mut();
    void zero_grad();

    Tensor clone() const;   // deep copy, detached leaf
    Tensor to_f64() const;  // upcast copy

    TensorNode* node() const { return node_.get(); }
    const std::shared_ptr<TensorNode>& node_ptr() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}
    std::shared_ptr<TensorNode> node_;
    friend Tensor make_tensor(std::vector<int64_t>, DType, bool);
};

Tensor make_tensor(std::vector<int64_t> shape, DType dt, bool requires_grad);

// ---- recording control ----

// Disables graph recording for its scope (sampling / pure evaluation).
struct GradPause {
    GradPause();
    ~GradPause();
    GradPause(const GradPause&) = delete;
    GradPause& operator=(const GradPause&) = delete;
};

bool grad_recording_enabled();
size_t graph_size();
void clear_graph();

// Reverse sweep from a scalar loss; populates grads on every requires_grad
// ancestor and clears the recorded graph.
void backward(const Tensor& loss);

// ---- ops ----

Tensor matmul(const Tensor& a, const Tensor& b);     // [M,K]x[K,N] -> [M,N]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // [M,D]x[N,D]^T -> [M,N]
Tensor add(const Tensor& a, const Tensor& b);        // same shape, or one side scalar
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_rowvec(const Tensor& x, const Tensor& v);  // x:[..,d] + v:[d] per row
Tensor mul_rowvec(const Tensor& x, const Tensor& v);
Tensor scale(const Tensor& x, float c);
Tensor softmax_lastdim(const Tensor& x);
Tensor rmsnorm(const Tensor& x, const Tensor& gain, float eps = 1e-6f);
Tensor gelu(const Tensor& x);
Tensor concat_lastdim(const Tensor& a, const Tensor& b);
Tensor slice_lastdim(const Tensor& x, int64_t start, int64_t len);
Tensor reshape(const Tensor& x, std::vector<int64_t> new_shape);
Tensor mean_all(const Tensor& x);
Tensor sum_sq(const Tensor& x);

// Row gather over a split embedding table: ids below base rows index `base`,
// the rest index `ctrl` (appended rows). Backward scatters into both tables.
Tensor embed_rows(const Tensor& base, const Tensor& ctrl, const std::vector<int>& ids);

// out[i] = x[index_map[i]]; index_map must be a bijection (patchify et al).
Tensor permute_elems(const Tensor& x, std::shared_ptr<const std::vector<int64_t>> index_map,
                     std::vector<int64_t> out_shape);

// 2-D row concat / slice, via the row-major layout.
Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor slice_rows(const Tensor& x, int64_t start, int64_t len);

enum class OpKind {
    Matmul,
    Add,
    Mul,
    SoftmaxLastDim,
    RmsNorm,
    Gelu,
    ConcatLastDim,
    Slice,
    Reshape,
    Mean,
    SumSq,
};

const char* op_kind_name(OpKind kind);

// Kind-dispatched entry point. Slice takes attrs {start, len}; Reshape takes
// the new shape in attrs.
Tensor op_forward(OpKind kind, const std::vector<Tensor>& inputs,
                  const std::vector<int64_t>& attrs = {});

// Central-difference oracle: analytic grad of f at x (f32 path) against an
// f64 re-evaluation with step eps. Returns max over elements of
// |analytic - numeric| / max(1, |numeric|).
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps);

}  // namespace typoflow
