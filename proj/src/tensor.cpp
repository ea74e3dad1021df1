#include "typoflow/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "typoflow/kernels.hpp"

namespace typoflow {

// ---------------------------------------------------------------- tensor

Tensor make_tensor(std::vector<int64_t> shape, DType dt, bool requires_grad) {
    auto n = std::make_shared<TensorNode>();
    n->shape = std::move(shape);
    n->dtype = dt;
    n->requires_grad = requires_grad;
    const int64_t count = n->numel();
    if (count < 0) throw ShapeError("tensor: negative extent");
    if (dt == DType::F32)
        n->f32.assign(static_cast<size_t>(count), 0.f);
    else
        n->f64.assign(static_cast<size_t>(count), 0.0);
    return Tensor(std::move(n));
}

Tensor Tensor::zeros(std::vector<int64_t> shape, DType dt) {
    return make_tensor(std::move(shape), dt, false);
}

Tensor Tensor::full(std::vector<int64_t> shape, float value) {
    Tensor t = make_tensor(std::move(shape), DType::F32, false);
    std::fill(t.node_->f32.begin(), t.node_->f32.end(), value);
    return t;
}

Tensor Tensor::from(std::vector<int64_t> shape, std::vector<float> data) {
    Tensor t = make_tensor(std::move(shape), DType::F32, false);
    if (static_cast<int64_t>(data.size()) != t.numel())
        throw ShapeError("tensor from: data length " + std::to_string(data.size()) +
                         " does not match shape product " + std::to_string(t.numel()));
    t.node_->f32 = std::move(data);
    return t;
}

Tensor Tensor::scalar(float value) { return full({1}, value); }

Tensor Tensor::randn(std::vector<int64_t> shape, Rng& rng, float stddev) {
    Tensor t = make_tensor(std::move(shape), DType::F32, false);
    for (float& v : t.node_->f32) v = rng.next_normal() * stddev;
    return t;
}

std::span<const float> Tensor::data() const {
    if (node_->dtype != DType::F32) throw ShapeError("tensor: f32 data requested on f64 tensor");
    return node_->f32;
}

std::span<float> Tensor::data_mut() {
    if (node_->dtype != DType::F32) throw ShapeError("tensor: f32 data requested on f64 tensor");
    return node_->f32;
}

std::span<const double> Tensor::data64() const {
    if (node_->dtype != DType::F64) throw ShapeError("tensor: f64 data requested on f32 tensor");
    return node_->f64;
}

std::span<double> Tensor::data64_mut() {
    if (node_->dtype != DType::F64) throw ShapeError("tensor: f64 data requested on f32 tensor");
    return node_->f64;
}

float Tensor::item() const {
    if (numel() != 1) throw ShapeError("tensor item: not a scalar");
    return node_->dtype == DType::F32 ? node_->f32[0] : static_cast<float>(node_->f64[0]);
}

double Tensor::item_as_double() const {
    if (numel() != 1) throw ShapeError("tensor item: not a scalar");
    return node_->dtype == DType::F32 ? static_cast<double>(node_->f32[0]) : node_->f64[0];
}

float Tensor::at(std::initializer_list<int64_t> idx) const {
    const auto& sh = node_->shape;
    if (idx.size() != sh.size()) throw ShapeError("tensor at: index rank mismatch");
    int64_t flat = 0;
    size_t d = 0;
    for (int64_t i : idx) {
        flat = flat * sh[d] + i;
        ++d;
    }
    return node_->dtype == DType::F32 ? node_->f32[static_cast<size_t>(flat)]
                                      : static_cast<float>(node_->f64[static_cast<size_t>(flat)]);
}

Tensor& Tensor::set_requires_grad(bool v) {
    if (v && node_->dtype != DType::F32)
        throw ShapeError("requires_grad is only supported on f32 tensors");
    node_->requires_grad = v;
    return *this;
}

std::span<const float> Tensor::grad() const {
    if (node_->grad.empty()) throw ShapeError("tensor grad: no grad present");
    return node_->grad;
}

std::span<float> Tensor::grad_mut() {
    if (node_->grad.empty()) node_->grad.assign(node_->f32.size(), 0.f);
    return node_->grad;
}

void Tensor::zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.f);
}

Tensor Tensor::clone() const {
    Tensor t = make_tensor(node_->shape, node_->dtype, false);
    t.node_->f32 = node_->f32;
    t.node_->f64 = node_->f64;
    return t;
}

Tensor Tensor::to_f64() const {
    Tensor t = make_tensor(node_->shape, DType::F64, false);
    if (node_->dtype == DType::F64) {
        t.node_->f64 = node_->f64;
    } else {
        for (size_t i = 0; i < node_->f32.size(); ++i) t.node_->f64[i] = node_->f32[i];
    }
    return t;
}

// ---------------------------------------------------------------- tape

namespace {

struct TapeEntry {
    std::function<void()> fn;
    std::shared_ptr<TensorNode> out;
};

thread_local std::vector<TapeEntry> g_tape;
thread_local int g_pause = 0;

bool should_record(std::initializer_list<const Tensor*> ins) {
    if (g_pause > 0) return false;
    bool any = false;
    for (const Tensor* t : ins) {
        if (t->dtype() != DType::F32) return false;
        any = any || t->requires_grad();
    }
    return any;
}

void ensure_grad(TensorNode* n) {
    if (n->grad.empty()) n->grad.assign(n->f32.size(), 0.f);
}

void accum(const std::shared_ptr<TensorNode>& n, const float* g, int64_t count, float factor = 1.f) {
    if (!n->requires_grad) return;
    ensure_grad(n.get());
    kern::active().vaxpy(factor, g, n->grad.data(), count);
}

void record(Tensor& out, std::function<void()> fn) {
    out.set_requires_grad(true);
    g_tape.push_back(TapeEntry{std::move(fn), out.node_ptr()});
}

std::string shp(const Tensor& t) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < t.shape().size(); ++i) {
        if (i) os << "x";
        os << t.shape()[i];
    }
    os << "]";
    return os.str();
}

ShapeError conformance(const char* kind, std::initializer_list<const Tensor*> ts) {
    std::string msg = std::string(kind) + ": shapes do not conform:";
    for (const Tensor* t : ts) msg += " " + shp(*t);
    return ShapeError(msg);
}

bool any_f64(std::initializer_list<const Tensor*> ts) {
    for (const Tensor* t : ts)
        if (t->dtype() == DType::F64) return true;
    return false;
}

std::vector<double> as_f64(const Tensor& t) {
    if (t.dtype() == DType::F64) {
        auto s = t.data64();
        return {s.begin(), s.end()};
    }
    auto s = t.data();
    std::vector<double> v(s.size());
    for (size_t i = 0; i < s.size(); ++i) v[i] = s[i];
    return v;
}

int64_t last_dim(const Tensor& t) { return t.shape().empty() ? 1 : t.shape().back(); }

}  // namespace

GradPause::GradPause() { ++g_pause; }
GradPause::~GradPause() { --g_pause; }

bool grad_recording_enabled() { return g_pause == 0; }
size_t graph_size() { return g_tape.size(); }
void clear_graph() { g_tape.clear(); }

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.dtype() != DType::F32 || loss.numel() != 1)
        throw ShapeError("backward: loss must be a scalar f32 tensor");
    if (g_tape.empty()) throw ShapeError("backward: graph is empty");
    for (TapeEntry& e : g_tape) ensure_grad(e.out.get());
    ensure_grad(loss.node());
    loss.node()->grad[0] = 1.f;
    for (size_t i = g_tape.size(); i-- > 0;) g_tape[i].fn();
    g_tape.clear();
}

// ---------------------------------------------------------------- ops

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) throw conformance("matmul", {&a, &b});
    const int m = static_cast<int>(a.dim(0)), k = static_cast<int>(a.dim(1)),
              n = static_cast<int>(b.dim(1));
    if (any_f64({&a, &b})) {
        auto av = as_f64(a), bv = as_f64(b);
        Tensor out = make_tensor({m, n}, DType::F64, false);
        kern::ref::gemm_nn<double>(av.data(), bv.data(), out.data64_mut().data(), m, k, n);
        return out;
    }
    Tensor out = make_tensor({m, n}, DType::F32, false);
    kern::active().gemm_nn(a.data().data(), b.data().data(), out.data_mut().data(), m, k, n);
    if (should_record({&a, &b})) {
        auto an = a.node_ptr(), bn = b.node_ptr(), on = out.node_ptr();
        record(out, [an, bn, on, m, k, n]() {
            const float* g = on->grad.data();
            if (an->requires_grad) {
                std::vector<float> bt(static_cast<size_t>(k) * n);
                kern::ref::transpose<float>(bn->f32.data(), bt.data(), k, n);
                std::vector<float> da(static_cast<size_t>(m) * k);
                kern::active().gemm_nn(g, bt.data(), da.data(), m, n, k);
                accum(an, da.data(), static_cast<int64_t>(m) * k);
            }
            if (bn->requires_grad) {
                std::vector<float> db(static_cast<size_t>(k) * n);
                kern::active().gemm_tn(an->f32.data(), g, db.data(), m, k, n);
                accum(bn, db.data(), static_cast<int64_t>(k) * n);
            }
        });
    }
    return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) throw conformance("matmul_nt", {&a, &b});
    const int m = static_cast<int>(a.dim(0)), d = static_cast<int>(a.dim(1)),
              n = static_cast<int>(b.dim(0));
    if (any_f64({&a, &b})) {
        auto av = as_f64(a), bv = as_f64(b);
        std::vector<double> bt(bv.size());
        kern::ref::transpose<double>(bv.data(), bt.data(), n, d);
        Tensor out = make_tensor({m, n}, DType::F64, false);
        kern::ref::gemm_nn<double>(av.data(), bt.data(), out.data64_mut().data(), m, d, n);
        return out;
    }
    std::vector<float> bt(static_cast<size_t>(n) * d);
    kern::ref::transpose<float>(b.data().data(), bt.data(), n, d);
    Tensor out = make_tensor({m, n}, DType::F32, false);
    kern::active().gemm_nn(a.data().data(), bt.data(), out.data_mut().data(), m, d, n);
    if (should_record({&a, &b})) {
        auto an = a.node_ptr(), bn = b.node_ptr(), on = out.node_ptr();
        record(out, [an, bn, on, m, d, n]() {
            const float* g = on->grad.data();
            if (an->requires_grad) {
                std::vector<float> da(static_cast<size_t>(m) * d);
                kern::active().gemm_nn(g, bn->f32.data(), da.data(), m, n, d);
                accum(an, da.data(), static_cast<int64_t>(m) * d);
            }
            if (bn->requires_grad) {
                std::vector<float> db(static_cast<size_t>(n) * d);
                kern::active().gemm_tn(g, an->f32.data(), db.data(), m, n, d);
                accum(bn, db.data(), static_cast<int64_t>(n) * d);
            }
        });
    }
    return out;
}

namespace {

enum class EwKind { Add, Sub, Mul };

// Elementwise with the one permitted broadcast: a scalar on either side.
Tensor elementwise(EwKind kind, const char* name, const Tensor& a, const Tensor& b) {
    const bool a_scalar = a.numel() == 1 && b.numel() != 1;
    const bool b_scalar = b.numel() == 1 && a.numel() != 1;
    if (!a_scalar && !b_scalar && a.shape() != b.shape()) throw conformance(name, {&a, &b});

    const Tensor& big = a_scalar ? b : a;
    const int64_t count = big.numel();

    if (any_f64({&a, &b})) {
        auto av = as_f64(a), bv = as_f64(b);
        Tensor out = make_tensor(big.shape(), DType::F64, false);
        auto o = out.data64_mut();
        for (int64_t i = 0; i < count; ++i) {
            const double x = a_scalar ? av[0] : av[static_cast<size_t>(i)];
            const double y = b_scalar ? bv[0] : bv[static_cast<size_t>(i)];
            o[static_cast<size_t>(i)] = kind == EwKind::Add ? x + y : kind == EwKind::Sub ? x - y : x * y;
        }
        return out;
    }

    Tensor out = make_tensor(big.shape(), DType::F32, false);
    const auto& kt = kern::active();
    float* o = out.data_mut().data();
    if (!a_scalar && !b_scalar) {
        if (kind == EwKind::Add) kt.vadd(a.data().data(), b.data().data(), o, count);
        else if (kind == EwKind::Sub) kt.vsub(a.data().data(), b.data().data(), o, count);
        else kt.vmul(a.data().data(), b.data().data(), o, count);
    } else {
        const float s = a_scalar ? a.data()[0] : b.data()[0];
        const float* v = a_scalar ? b.data().data() : a.data().data();
        for (int64_t i = 0; i < count; ++i) {
            const float x = a_scalar ? s : v[i];
            const float y = a_scalar ? v[i] : s;
            o[i] = kind == EwKind::Add ? x + y : kind == EwKind::Sub ? x - y : x * y;
        }
    }

    if (should_record({&a, &b})) {
        auto an = a.node_ptr(), bn = b.node_ptr(), on = out.node_ptr();
        record(out, [kind, an, bn, on, a_scalar, b_scalar, count]() {
            const float* g = on->grad.data();
            auto side = [&](const std::shared_ptr<TensorNode>& n, bool is_scalar, bool is_b) {
                if (!n->requires_grad) return;
                const float sign = (is_b && kind == EwKind::Sub) ? -1.f : 1.f;
                if (kind == EwKind::Mul) {
                    const auto& other = is_b ? an : bn;
                    const bool other_scalar = is_b ? a_scalar : b_scalar;
                    std::vector<float> gi(static_cast<size_t>(count));
                    if (other_scalar)
                        kern::active().vscale(g, other->f32[0], gi.data(), count);
                    else
                        kern::active().vmul(g, other->f32.data(), gi.data(), count);
                    if (is_scalar) {
                        float total = 0.f;
                        for (int64_t i = 0; i < count; ++i) total += gi[static_cast<size_t>(i)];
                        accum(n, &total, 1);
                    } else {
                        accum(n, gi.data(), count);
                    }
                } else if (is_scalar) {
                    float total = 0.f;
                    for (int64_t i = 0; i < count; ++i) total += g[i];
                    total *= sign;
                    accum(n, &total, 1);
                } else {
                    accum(n, g, count, sign);
                }
            };
            side(an, a_scalar, false);
            side(bn, b_scalar, true);
        });
    }
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(EwKind::Add, "add", a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(EwKind::Sub, "sub", a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(EwKind::Mul, "mul", a, b); }

namespace {

Tensor rowvec_op(bool is_add, const char* name, const Tensor& x, const Tensor& v) {
    const int64_t d = last_dim(x);
    if (v.rank() != 1 || v.dim(0) != d || x.rank() < 1) throw conformance(name, {&x, &v});
    const int64_t rows = x.numel() / d;

    if (any_f64({&x, &v})) {
        auto xv = as_f64(x), vv = as_f64(v);
        Tensor out = make_tensor(x.shape(), DType::F64, false);
        auto o = out.data64_mut();
        for (int64_t r = 0; r < rows; ++r)
            for (int64_t j = 0; j < d; ++j) {
                const size_t i = static_cast<size_t>(r * d + j);
                o[i] = is_add ? xv[i] + vv[static_cast<size_t>(j)] : xv[i] * vv[static_cast<size_t>(j)];
            }
        return out;
    }

    Tensor out = make_tensor(x.shape(), DType::F32, false);
    const auto& kt = kern::active();
    for (int64_t r = 0; r < rows; ++r) {
        const float* xr = x.data().data() + r * d;
        float* orow = out.data_mut().data() + r * d;
        if (is_add) kt.vadd(xr, v.data().data(), orow, d);
        else kt.vmul(xr, v.data().data(), orow, d);
    }

    if (should_record({&x, &v})) {
        auto xn = x.node_ptr(), vn = v.node_ptr(), on = out.node_ptr();
        record(out, [is_add, xn, vn, on, rows, d]() {
            const float* g = on->grad.data();
            const auto& kt = kern::active();
            if (xn->requires_grad) {
                if (is_add) {
                    accum(xn, g, rows * d);
                } else {
                    std::vector<float> gx(static_cast<size_t>(rows * d));
                    for (int64_t r = 0; r < rows; ++r)
                        kt.vmul(g + r * d, vn->f32.data(), gx.data() + r * d, d);
                    accum(xn, gx.data(), rows * d);
                }
            }
            if (vn->requires_grad) {
                std::vector<float> gv(static_cast<size_t>(d), 0.f);
                if (is_add) {
                    for (int64_t r = 0; r < rows; ++r) kt.vaxpy(1.f, g + r * d, gv.data(), d);
                } else {
                    std::vector<float> tmp(static_cast<size_t>(d));
                    for (int64_t r = 0; r < rows; ++r) {
                        kt.vmul(g + r * d, xn->f32.data() + r * d, tmp.data(), d);
                        kt.vaxpy(1.f, tmp.data(), gv.data(), d);
                    }
                }
                accum(vn, gv.data(), d);
            }
        });
    }
    return out;
}

}  // namespace

Tensor add_rowvec(const Tensor& x, const Tensor& v) { return rowvec_op(true, "add_rowvec", x, v); }
Tensor mul_rowvec(const Tensor& x, const Tensor& v) { return rowvec_op(false, "mul_rowvec", x, v); }

Tensor scale(const Tensor& x, float c) {
    if (x.dtype() == DType::F64) {
        Tensor out = make_tensor(x.shape(), DType::F64, false);
        auto xv = x.data64();
        auto o = out.data64_mut();
        for (size_t i = 0; i < xv.size(); ++i) o[i] = xv[i] * static_cast<double>(c);
        return out;
    }
    Tensor out = make_tensor(x.shape(), DType::F32, false);
    kern::active().vscale(x.data().data(), c, out.data_mut().data(), x.numel());
    if (should_record({&x})) {
        auto xn = x.node_ptr(), on = out.node_ptr();
        const int64_t count = x.numel();
        record(out, [xn, on, c, count]() { accum(xn, on->grad.data(), count, c); });
    }
    return out;
}

namespace {

template <typename T>
void softmax_rows(const T* x, T* y, int64_t rows, int64_t d) {
    for (int64_t r = 0; r < rows; ++r) {
        const T* xr = x + r * d;
        T* yr = y + r * d;
        T mx = xr[0];
        for (int64_t j = 1; j < d; ++j)
            if (xr[j] > mx) mx = xr[j];
        T sum = T(0);
        for (int64_t j = 0; j < d; ++j) {
            yr[j] = std::exp(xr[j] - mx);
            sum += yr[j];
        }
        const T inv = T(1) / sum;
        for (int64_t j = 0; j < d; ++j) yr[j] *= inv;
    }
}

}  // namespace

Tensor softmax_lastdim(const Tensor& x) {
    const int64_t d = last_dim(x);
    if (d < 1) throw conformance("softmax_lastdim", {&x});
    const int64_t rows = x.numel() / d;
    if (x.dtype() == DType::F64) {
        Tensor out = make_tensor(x.shape(), DType::F64, false);
        softmax_rows<double>(x.data64().data(), out.data64_mut().data(), rows, d);
        return out;
    }
    Tensor out = make_tensor(x.shape(), DType::F32, false);
    softmax_rows<float>(x.data().data(), out.data_mut().data(), rows, d);
    if (should_record({&x})) {
        auto xn = x.node_ptr(), on = out.node_ptr();
        record(out, [xn, on, rows, d]() {
            if (!xn->requires_grad) return;
            const float* g = on->grad.data();
            const float* y = on->f32.data();
            std::vector<float> gx(static_cast<size_t>(rows * d));
            for (int64_t r = 0; r < rows; ++r) {
                float s = 0.f;
                for (int64_t j = 0; j < d; ++j) s += g[r * d + j] * y[r * d + j];
                for (int64_t j = 0; j < d; ++j)
                    gx[static_cast<size_t>(r * d + j)] = y[r * d + j] * (g[r * d + j] - s);
            }
            accum(xn, gx.data(), rows * d);
        });
    }
    return out;
}

namespace {

template <typename T>
void rmsnorm_rows(const T* x, const T* gain, T* y, int64_t rows, int64_t d, T eps) {
    for (int64_t r = 0; r < rows; ++r) {
        const T* xr = x + r * d;
        T* yr = y + r * d;
        T ms = T(0);
        for (int64_t j = 0; j < d; ++j) ms += xr[j] * xr[j];
        ms /= static_cast<T>(d);
        const T inv = T(1) / std::sqrt(ms + eps);
        for (int64_t j = 0; j < d; ++j) yr[j] = xr[j] * inv * gain[j];
    }
}

}  // namespace

Tensor rmsnorm(const Tensor& x, const Tensor& gain, float eps) {
    const int64_t d = last_dim(x);
    if (gain.rank() != 1 || gain.dim(0) != d) throw conformance("rmsnorm", {&x, &gain});
    const int64_t rows = x.numel() / d;
    if (any_f64({&x, &gain})) {
        auto xv = as_f64(x), gv = as_f64(gain);
        Tensor out = make_tensor(x.shape(), DType::F64, false);
        rmsnorm_rows<double>(xv.data(), gv.data(), out.data64_mut().data(), rows, d,
                             static_cast<double>(eps));
        return out;
    }
    Tensor out = make_tensor(x.shape(), DType::F32, false);
    rmsnorm_rows<float>(x.data().data(), gain.data().data(), out.data_mut().data(), rows, d, eps);
    if (should_record({&x, &gain})) {
        auto xn = x.node_ptr(), gn = gain.node_ptr(), on = out.node_ptr();
        record(out, [xn, gn, on, rows, d, eps]() {
            const float* g = on->grad.data();
            const float* xd = xn->f32.data();
            const float* gd = gn->f32.data();
            std::vector<float> gx;
            if (xn->requires_grad) gx.assign(static_cast<size_t>(rows * d), 0.f);
            std::vector<float> gg;
            if (gn->requires_grad) gg.assign(static_cast<size_t>(d), 0.f);
            for (int64_t r = 0; r < rows; ++r) {
                const float* xr = xd + r * d;
                const float* gr = g + r * d;
                float ms = 0.f;
                for (int64_t j = 0; j < d; ++j) ms += xr[j] * xr[j];
                ms /= static_cast<float>(d);
                const float inv = 1.f / std::sqrt(ms + eps);
                if (xn->requires_grad) {
                    float s = 0.f;
                    for (int64_t j = 0; j < d; ++j) s += gr[j] * gd[j] * xr[j];
                    const float inv3 = inv * inv * inv;
                    for (int64_t j = 0; j < d; ++j)
                        gx[static_cast<size_t>(r * d + j)] =
                            gr[j] * gd[j] * inv - xr[j] * inv3 * s / static_cast<float>(d);
                }
                if (gn->requires_grad)
                    for (int64_t j = 0; j < d; ++j) gg[static_cast<size_t>(j)] += gr[j] * xr[j] * inv;
            }
            if (xn->requires_grad) accum(xn, gx.data(), rows * d);
            if (gn->requires_grad) accum(gn, gg.data(), d);
        });
    }
    return out;
}

namespace {

constexpr double kGeluAlpha = 0.7978845608028653558798921198687;  // sqrt(2/pi)
constexpr double kGeluBeta = 0.044715;

template <typename T>
T gelu_one(T x) {
    const T u = static_cast<T>(kGeluAlpha) * (x + static_cast<T>(kGeluBeta) * x * x * x);
    return T(0.5) * x * (T(1) + std::tanh(u));
}

template <typename T>
T gelu_grad_one(T x) {
    const T u = static_cast<T>(kGeluAlpha) * (x + static_cast<T>(kGeluBeta) * x * x * x);
    const T th = std::tanh(u);
    const T du = static_cast<T>(kGeluAlpha) * (T(1) + T(3) * static_cast<T>(kGeluBeta) * x * x);
    return T(0.5) * (T(1) + th) + T(0.5) * x * (T(1) - th * th) * du;
}

}  // namespace

Tensor gelu(const Tensor& x) {
    if (x.dtype() == DType::F64) {
        Tensor out = make_tensor(x.shape(), DType::F64, false);
        auto xv = x.data64();
        auto o = out.data64_mut();
        for (size_t i = 0; i < xv.size(); ++i) o[i] = gelu_one<double>(xv[i]);
        return out;
    }
    Tensor out = make_tensor(x.shape(), DType::F32, false);
    auto xv = x.data();
    auto o = out.data_mut();
    for (size_t i = 0; i < xv.size(); ++i) o[i] = gelu_one<float>(xv[i]);
    if (should_record({&x})) {
        auto xn = x.node_ptr(), on = out.node_ptr();
        const int64_t count = x.numel();
        record(out, [xn, on, count]() {
            if (!xn->requires_grad) return;
            const float* g = on->grad.data();
            std::vector<float> gx(static_cast<size_t>(count));
            for (int64_t i = 0; i < count; ++i)
                gx[static_cast<size_t>(i)] = g[i] * gelu_grad_one<float>(xn->f32[static_cast<size_t>(i)]);
            accum(xn, gx.data(), count);
        });
    }
    return out;
}

Tensor concat_lastdim(const Tensor& a, const Tensor& b) {
    if (a.rank() != b.rank() || a.rank() < 1) throw conformance("concat_lastdim", {&a, &b});
    for (int i = 0; i + 1 < a.rank(); ++i)
        if (a.dim(i) != b.dim(i)) throw conformance("concat_lastdim", {&a, &b});
    const int64_t da = a.shape().back(), db = b.shape().back();
    std::vector<int64_t> oshape = a.shape();
    oshape.back() = da + db;
    const int64_t rows = a.numel() / da;

    if (any_f64({&a, &b})) {
        auto av = as_f64(a), bv = as_f64(b);
        Tensor out = make_tensor(oshape, DType::F64, false);
        auto o = out.data64_mut();
        for (int64_t r = 0; r < rows; ++r) {
            std::copy_n(av.data() + r * da, da, o.data() + r * (da + db));
            std::copy_n(bv.data() + r * db, db, o.data() + r * (da + db) + da);
        }
        return out;
    }

    Tensor out = make_tensor(oshape, DType::F32, false);
    float* o = out.data_mut().data();
    for (int64_t r = 0; r < rows; ++r) {
        std::copy_n(a.data().data() + r * da, da, o + r * (da + db));
        std::copy_n(b.data().data() + r * db, db, o + r * (da + db) + da);
    }
    if (should_record({&a, &b})) {
        auto an = a.node_ptr(), bn = b.node_ptr(), on = out.node_ptr();
        record(out, [an, bn, on, rows, da, db]() {
            const float* g = on->grad.data();
            if (an->requires_grad) {
                ensure_grad(an.get());
                for (int64_t r = 0; r < rows; ++r)
                    kern::active().vaxpy(1.f, g + r * (da + db), an->grad.data() + r * da, da);
            }
            if (bn->requires_grad) {
                ensure_grad(bn.get());
                for (int64_t r = 0; r < rows; ++r)
                    kern::active().vaxpy(1.f, g + r * (da + db) + da, bn->grad.data() + r * db, db);
            }
        });
    }
    return out;
}

Tensor slice_lastdim(const Tensor& x, int64_t start, int64_t len) {
    const int64_t d = last_dim(x);
    if (start < 0 || len < 1 || start + len > d)
        throw ShapeError("slice: range [" + std::to_string(start) + "," +
                         std::to_string(start + len) + ") out of last dim " + std::to_string(d));
    std::vector<int64_t> oshape = x.shape();
    oshape.back() = len;
    const int64_t rows = x.numel() / d;

    if (x.dtype() == DType::F64) {
        Tensor out = make_tensor(oshape, DType::F64, false);
        auto xv = x.data64();
        auto o = out.data64_mut();
        for (int64_t r = 0; r < rows; ++r)
            std::copy_n(xv.data() + r * d + start, len, o.data() + r * len);
        return out;
    }
    Tensor out = make_tensor(oshape, DType::F32, false);
    for (int64_t r = 0; r < rows; ++r)
        std::copy_n(x.data().data() + r * d + start, len, out.data_mut().data() + r * len);
    if (should_record({&x})) {
        auto xn = x.node_ptr(), on = out.node_ptr();
        record(out, [xn, on, rows, d, start, len]() {
            if (!xn->requires_grad) return;
            ensure_grad(xn.get());
            const float* g = on->grad.data();
            for (int64_t r = 0; r < rows; ++r)
                kern::active().vaxpy(1.f, g + r * len, xn->grad.data() + r * d + start, len);
        });
    }
    return out;
}

Tensor reshape(const Tensor& x, std::vector<int64_t> new_shape) {
    int64_t n = 1;
    for (int64_t e : new_shape) n *= e;
    if (n != x.numel())
        throw ShapeError("reshape: cannot view " + shp(x) + " as product " + std::to_string(n));
    if (x.dtype() == DType::F64) {
        Tensor out = make_tensor(new_shape, DType::F64, false);
        auto xv = x.data64();
        std::copy(xv.begin(), xv.end(), out.data64_mut().begin());
        return out;
    }
    Tensor out = make_tensor(new_shape, DType::F32, false);
    auto xv = x.data();
    std::copy(xv.begin(), xv.end(), out.data_mut().begin());
    if (should_record({&x})) {
        auto xn = x.node_ptr(), on = out.node_ptr();
        const int64_t count = x.numel();
        record(out, [xn, on, count]() { accum(xn, on->grad.data(), count); });
    }
    return out;
}

Tensor mean_all(const Tensor& x) {
    const int64_t count = x.numel();
    if (count < 1) throw conformance("mean", {&x});
    if (x.dtype() == DType::F64) {
        auto xv = x.data64();
        double s = 0.0;
        for (double v : xv) s += v;
        Tensor out = make_tensor({1}, DType::F64, false);
        out.data64_mut()[0] = s / static_cast<double>(count);
        return out;
    }
    auto xv = x.data();
    float s = 0.f;
    for (float v : xv) s += v;
    Tensor out = Tensor::scalar(s / static_cast<float>(count));
    if (should_record({&x})) {
        auto xn = x.node_ptr(), on = out.node_ptr();
        record(out, [xn, on, count]() {
            if (!xn->requires_grad) return;
            const float gv = on->grad[0] / static_cast<float>(count);
            ensure_grad(xn.get());
            for (int64_t i = 0; i < count; ++i) xn->grad[static_cast<size_t>(i)] += gv;
        });
    }
    return out;
}

Tensor sum_sq(const Tensor& x) {
    const int64_t count = x.numel();
    if (count < 1) throw conformance("sum_sq", {&x});
    if (x.dtype() == DType::F64) {
        auto xv = x.data64();
        double s = 0.0;
        for (double v : xv) s += v * v;
        Tensor out = make_tensor({1}, DType::F64, false);
        out.data64_mut()[0] = s;
        return out;
    }
    auto xv = x.data();
    float s = 0.f;
    for (float v : xv) s += v * v;
    Tensor out = Tensor::scalar(s);
    if (should_record({&x})) {
        auto xn = x.node_ptr(), on = out.node_ptr();
        record(out, [xn, on, count]() {
            if (!xn->requires_grad) return;
            const float g2 = 2.f * on->grad[0];
            ensure_grad(xn.get());
            for (int64_t i = 0; i < count; ++i)
                xn->grad[static_cast<size_t>(i)] += g2 * xn->f32[static_cast<size_t>(i)];
        });
    }
    return out;
}

Tensor embed_rows(const Tensor& base, const Tensor& ctrl, const std::vector<int>& ids) {
    if (base.rank() != 2 || ctrl.rank() != 2 || base.dim(1) != ctrl.dim(1))
        throw conformance("embed_rows", {&base, &ctrl});
    const int64_t vb = base.dim(0), vc = ctrl.dim(0), d = base.dim(1);
    const int64_t len = static_cast<int64_t>(ids.size());
    for (int id : ids)
        if (id < 0 || id >= vb + vc)
            throw ShapeError("embed_rows: id " + std::to_string(id) + " outside table of " +
                             std::to_string(vb + vc) + " rows");

    if (any_f64({&base, &ctrl})) {
        auto bv = as_f64(base), cv = as_f64(ctrl);
        Tensor out = make_tensor({len, d}, DType::F64, false);
        auto o = out.data64_mut();
        for (int64_t i = 0; i < len; ++i) {
            const int id = ids[static_cast<size_t>(i)];
            const double* src = id < vb ? bv.data() + id * d : cv.data() + (id - vb) * d;
            std::copy_n(src, d, o.data() + i * d);
        }
        return out;
    }

    Tensor out = make_tensor({len, d}, DType::F32, false);
    for (int64_t i = 0; i < len; ++i) {
        const int id = ids[static_cast<size_t>(i)];
        const float* src =
            id < vb ? base.data().data() + id * d : ctrl.data().data() + (id - vb) * d;
        std::copy_n(src, d, out.data_mut().data() + i * d);
    }
    if (should_record({&base, &ctrl})) {
        auto bn = base.node_ptr(), cn = ctrl.node_ptr(), on = out.node_ptr();
        auto ids_copy = std::make_shared<std::vector<int>>(ids);
        record(out, [bn, cn, on, ids_copy, vb, d]() {
            const float* g = on->grad.data();
            if (bn->requires_grad) ensure_grad(bn.get());
            if (cn->requires_grad) ensure_grad(cn.get());
            for (size_t i = 0; i < ids_copy->size(); ++i) {
                const int id = (*ids_copy)[i];
                if (id < vb) {
                    if (bn->requires_grad)
                        kern::active().vaxpy(1.f, g + i * d, bn->grad.data() + id * d, d);
                } else if (cn->requires_grad) {
                    kern::active().vaxpy(1.f, g + i * d, cn->grad.data() + (id - vb) * d, d);
                }
            }
        });
    }
    return out;
}

Tensor permute_elems(const Tensor& x, std::shared_ptr<const std::vector<int64_t>> index_map,
                     std::vector<int64_t> out_shape) {
    int64_t n = 1;
    for (int64_t e : out_shape) n *= e;
    if (n != x.numel() || static_cast<int64_t>(index_map->size()) != n)
        throw ShapeError("permute_elems: map/shape size mismatch with " + shp(x));
    if (x.dtype() == DType::F64) {
        Tensor out = make_tensor(out_shape, DType::F64, false);
        auto xv = x.data64();
        auto o = out.data64_mut();
        for (int64_t i = 0; i < n; ++i)
            o[static_cast<size_t>(i)] = xv[static_cast<size_t>((*index_map)[static_cast<size_t>(i)])];
        return out;
    }
    Tensor out = make_tensor(out_shape, DType::F32, false);
    auto xv = x.data();
    auto o = out.data_mut();
    for (int64_t i = 0; i < n; ++i)
        o[static_cast<size_t>(i)] = xv[static_cast<size_t>((*index_map)[static_cast<size_t>(i)])];
    if (should_record({&x})) {
        auto xn = x.node_ptr(), on = out.node_ptr();
        record(out, [xn, on, index_map, n]() {
            if (!xn->requires_grad) return;
            ensure_grad(xn.get());
            const float* g = on->grad.data();
            for (int64_t i = 0; i < n; ++i)
                xn->grad[static_cast<size_t>((*index_map)[static_cast<size_t>(i)])] += g[i];
        });
    }
    return out;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) throw conformance("concat_rows", {&a, &b});
    const int64_t d = a.dim(1);
    Tensor af = reshape(a, {1, a.numel()});
    Tensor bf = reshape(b, {1, b.numel()});
    return reshape(concat_lastdim(af, bf), {a.dim(0) + b.dim(0), d});
}

Tensor slice_rows(const Tensor& x, int64_t start, int64_t len) {
    if (x.rank() != 2) throw conformance("slice_rows", {&x});
    const int64_t d = x.dim(1);
    Tensor f = reshape(x, {1, x.numel()});
    return reshape(slice_lastdim(f, start * d, len * d), {len, d});
}

// ---------------------------------------------------------------- dispatch

const char* op_kind_name(OpKind kind) {
    switch (kind) {
        case OpKind::Matmul: return "matmul";
        case OpKind::Add: return "add";
        case OpKind::Mul: return "mul";
        case OpKind::SoftmaxLastDim: return "softmax_lastdim";
        case OpKind::RmsNorm: return "rmsnorm";
        case OpKind::Gelu: return "gelu";
        case OpKind::ConcatLastDim: return "concat_lastdim";
        case OpKind::Slice: return "slice";
        case OpKind::Reshape: return "reshape";
        case OpKind::Mean: return "mean";
        case OpKind::SumSq: return "sum_sq";
    }
    return "?";
}

Tensor op_forward(OpKind kind, const std::vector<Tensor>& inputs, const std::vector<int64_t>& attrs) {
    auto want = [&](size_t n) {
        if (inputs.size() != n)
            throw ShapeError(std::string(op_kind_name(kind)) + ": expected " + std::to_string(n) +
                             " inputs, got " + std::to_string(inputs.size()));
    };
    switch (kind) {
        case OpKind::Matmul: want(2); return matmul(inputs[0], inputs[1]);
        case OpKind::Add: want(2); return add(inputs[0], inputs[1]);
        case OpKind::Mul: want(2); return mul(inputs[0], inputs[1]);
        case OpKind::SoftmaxLastDim: want(1); return softmax_lastdim(inputs[0]);
        case OpKind::RmsNorm: want(2); return rmsnorm(inputs[0], inputs[1]);
        case OpKind::Gelu: want(1); return gelu(inputs[0]);
        case OpKind::ConcatLastDim: want(2); return concat_lastdim(inputs[0], inputs[1]);
        case OpKind::Slice:
            want(1);
            if (attrs.size() != 2) throw ShapeError("slice: attrs must be {start, len}");
            return slice_lastdim(inputs[0], attrs[0], attrs[1]);
        case OpKind::Reshape: want(1); return reshape(inputs[0], attrs);
        case OpKind::Mean: want(1); return mean_all(inputs[0]);
        case OpKind::SumSq: want(1); return sum_sq(inputs[0]);
    }
    throw ShapeError("op_forward: unknown kind");
}

// ---------------------------------------------------------------- grad check

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps) {
    if (eps <= 0) throw ShapeError("grad_check: eps must be positive");

    Tensor xg = x.clone();
    xg.set_requires_grad(true);
    Tensor loss = f(xg);
    if (loss.numel() != 1) throw ShapeError("grad_check: f must be scalar-valued");
    backward(loss);
    std::vector<float> analytic(static_cast<size_t>(x.numel()), 0.f);
    if (xg.has_grad()) {
        auto g = xg.grad();
        std::copy(g.begin(), g.end(), analytic.begin());
    }

    Tensor x64 = x.to_f64();
    auto xd = x64.data64_mut();
    double max_err = 0.0;
    for (size_t i = 0; i < xd.size(); ++i) {
        const double saved = xd[i];
        xd[i] = saved + eps;
        const double fp = f(x64).item_as_double();
        xd[i] = saved - eps;
        const double fm = f(x64).item_as_double();
        xd[i] = saved;
        const double numeric = (fp - fm) / (2.0 * eps);
        const double err =
            std::abs(static_cast<double>(analytic[i]) - numeric) / std::max(1.0, std::abs(numeric));
        if (!std::isfinite(err)) throw ShapeError("grad_check: non-finite value encountered");
        max_err = std::max(max_err, err);
    }
    return max_err;
}

}  // namespace typoflow
