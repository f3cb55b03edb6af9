#include "mccl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mccl/errors.hpp"

namespace mccl {

namespace {

thread_local Tape* g_active_tape = nullptr;

std::string shape_str(const std::vector<std::size_t>& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeMismatch(msg);
}

bool grad_nonzero(const detail::TensorImpl& t) {
    if (t.grad.size() != t.value.size()) return false;
    for (double g : t.grad) {
        if (g != 0.0) return true;
    }
    return false;
}

}  // namespace

namespace detail {
double* TensorImpl::ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad.data();
}
}  // namespace detail

// ---- Tensor -----------------------------------------------------------------

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    return full(std::move(shape), 0.0);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double fill) {
    auto impl = std::make_shared<detail::TensorImpl>();
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    impl->shape = std::move(shape);
    impl->value.assign(n, fill);
    return Tensor(std::move(impl));
}

Tensor Tensor::from_data(std::vector<std::size_t> shape, std::vector<double> data) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    require(n == data.size(), "from_data: shape " + shape_str(shape) + " does not match " +
                                  std::to_string(data.size()) + " values");
    auto impl = std::make_shared<detail::TensorImpl>();
    impl->shape = std::move(shape);
    impl->value = std::move(data);
    return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double v) { return from_data({1}, {v}); }

Tensor Tensor::parameter(std::vector<std::size_t> shape, std::vector<double> data) {
    Tensor t = from_data(std::move(shape), std::move(data));
    t.impl_->requires_grad = true;
    t.impl_->leaf = true;
    return t;
}

std::size_t Tensor::rows() const {
    require(ndim() >= 1, "rows() on 0-d tensor");
    return impl_->shape[0];
}

std::size_t Tensor::cols() const {
    if (ndim() == 1) return 1;
    require(ndim() == 2, "cols() on tensor of rank " + std::to_string(ndim()));
    return impl_->shape[1];
}

std::vector<double>& Tensor::grad() {
    impl_->ensure_grad();
    return impl_->grad;
}

const std::vector<double>& Tensor::grad() const {
    impl_->ensure_grad();
    return impl_->grad;
}

void Tensor::zero_grad() {
    if (impl_ && !impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

double Tensor::item() const {
    require(numel() == 1, "item() requires a 1-element tensor, got " + shape_str(shape()));
    return impl_->value[0];
}

// ---- Tape -------------------------------------------------------------------

Tape::Tape() {
    previous_ = g_active_tape;
    g_active_tape = this;
}

Tape::~Tape() { g_active_tape = previous_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(std::shared_ptr<detail::TensorImpl> output, std::function<void()> adjoint) {
    records_.push_back({std::move(output), std::move(adjoint)});
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1) {
        throw NonScalarLoss("backward() expects a scalar loss");
    }
    // Intermediate grads are per-pass state; leaf grads accumulate.
    for (Record& r : records_) {
        if (!r.output->leaf) {
            std::fill(r.output->grad.begin(), r.output->grad.end(), 0.0);
        }
    }
    loss.impl()->ensure_grad();
    loss.impl()->grad[0] += 1.0;
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
        if (grad_nonzero(*it->output)) it->adjoint();
    }
}

// ---- op plumbing ------------------------------------------------------------

namespace {

using Impl = std::shared_ptr<detail::TensorImpl>;

bool should_record(std::initializer_list<const Tensor*> inputs) {
    if (g_active_tape == nullptr) return false;
    for (const Tensor* t : inputs) {
        if (t->requires_grad()) return true;
    }
    return false;
}

void record_op(Tensor& out, std::function<void()> adjoint) {
    out.impl()->requires_grad = true;
    g_active_tape->record(out.impl(), std::move(adjoint));
}

// Elementwise binary with scalar broadcast: either both shapes equal, or one
// operand has a single element.
enum class Broadcast { none, left_scalar, right_scalar };

Broadcast binary_mode(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() == b.shape()) return Broadcast::none;
    if (a.numel() == 1) return Broadcast::left_scalar;
    if (b.numel() == 1) return Broadcast::right_scalar;
    throw ShapeMismatch(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) +
                        " vs " + shape_str(b.shape()));
}

}  // namespace

// ---- elementwise binary ------------------------------------------------------

template <typename Fwd, typename AdjA, typename AdjB>
static Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, Fwd fwd, AdjA adj_a,
                        AdjB adj_b) {
    const Broadcast mode = binary_mode(a, b, name);
    const Tensor& big = (mode == Broadcast::left_scalar) ? b : a;
    Tensor out = Tensor::zeros(big.shape());
    const std::size_t n = out.numel();
    const double* pa = a.values().data();
    const double* pb = b.values().data();
    double* po = out.values().data();
    for (std::size_t i = 0; i < n; ++i) {
        const double x = (mode == Broadcast::left_scalar) ? pa[0] : pa[i];
        const double y = (mode == Broadcast::right_scalar) ? pb[0] : pb[i];
        po[i] = fwd(x, y);
    }
    if (should_record({&a, &b})) {
        record_op(out, [ai = a.impl(), bi = b.impl(), oi = out.impl(), mode, adj_a, adj_b]() {
            const std::size_t n = oi->numel();
            const double* g = oi->grad.data();
            const double* pa = ai->value.data();
            const double* pb = bi->value.data();
            if (ai->requires_grad) {
                double* da = ai->ensure_grad();
                for (std::size_t i = 0; i < n; ++i) {
                    const double x = (mode == Broadcast::left_scalar) ? pa[0] : pa[i];
                    const double y = (mode == Broadcast::right_scalar) ? pb[0] : pb[i];
                    da[(mode == Broadcast::left_scalar) ? 0 : i] += adj_a(g[i], x, y);
                }
            }
            if (bi->requires_grad) {
                double* db = bi->ensure_grad();
                for (std::size_t i = 0; i < n; ++i) {
                    const double x = (mode == Broadcast::left_scalar) ? pa[0] : pa[i];
                    const double y = (mode == Broadcast::right_scalar) ? pb[0] : pb[i];
                    db[(mode == Broadcast::right_scalar) ? 0 : i] += adj_b(g[i], x, y);
                }
            }
        });
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "add", [](double x, double y) { return x + y; },
        [](double g, double, double) { return g; }, [](double g, double, double) { return g; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "sub", [](double x, double y) { return x - y; },
        [](double g, double, double) { return g; }, [](double g, double, double) { return -g; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "mul", [](double x, double y) { return x * y; },
        [](double g, double, double y) { return g * y; },
        [](double g, double x, double) { return g * x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "div", [](double x, double y) { return x / y; },
        [](double g, double, double y) { return g / y; },
        [](double g, double x, double y) { return -g * x / (y * y); });
}

// ---- scalar-constant ops -----------------------------------------------------

Tensor add_scalar(const Tensor& a, double c) {
    Tensor out = Tensor::zeros(a.shape());
    const std::size_t n = out.numel();
    for (std::size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] + c;
    if (should_record({&a})) {
        record_op(out, [ai = a.impl(), oi = out.impl()]() {
            double* da = ai->ensure_grad();
            const double* g = oi->grad.data();
            for (std::size_t i = 0; i < oi->numel(); ++i) da[i] += g[i];
        });
    }
    return out;
}

Tensor mul_scalar(const Tensor& a, double c) {
    Tensor out = Tensor::zeros(a.shape());
    const std::size_t n = out.numel();
    for (std::size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] * c;
    if (should_record({&a})) {
        record_op(out, [ai = a.impl(), oi = out.impl(), c]() {
            double* da = ai->ensure_grad();
            const double* g = oi->grad.data();
            for (std::size_t i = 0; i < oi->numel(); ++i) da[i] += g[i] * c;
        });
    }
    return out;
}

// ---- matmul / transpose --------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require(a.ndim() == 2 && b.ndim() == 2,
            "matmul: expects 2-d tensors, got " + shape_str(a.shape()) + " and " +
                shape_str(b.shape()));
    const std::size_t m = a.shape()[0], k = a.shape()[1];
    const std::size_t k2 = b.shape()[0], n = b.shape()[1];
    require(k == k2, "matmul: inner dimensions " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    Tensor out = Tensor::zeros({m, n});
    {
        const double* pa = a.values().data();
        const double* pb = b.values().data();
        double* po = out.values().data();
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t l = 0; l < k; ++l) {
                const double av = pa[i * k + l];
                if (av == 0.0) continue;
                const double* brow = pb + l * n;
                double* orow = po + i * n;
                for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
            }
        }
    }
    if (should_record({&a, &b})) {
        record_op(out, [ai = a.impl(), bi = b.impl(), oi = out.impl(), m, k, n]() {
            const double* g = oi->grad.data();
            if (ai->requires_grad) {
                double* da = ai->ensure_grad();
                const double* pb = bi->value.data();
                // dA[i,l] += sum_j G[i,j] * B[l,j]
                for (std::size_t i = 0; i < m; ++i) {
                    const double* grow = g + i * n;
                    for (std::size_t l = 0; l < k; ++l) {
                        const double* brow = pb + l * n;
                        double acc = 0.0;
                        for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                        da[i * k + l] += acc;
                    }
                }
            }
            if (bi->requires_grad) {
                double* db = bi->ensure_grad();
                const double* pa = ai->value.data();
                // dB[l,j] += sum_i A[i,l] * G[i,j]
                for (std::size_t i = 0; i < m; ++i) {
                    const double* grow = g + i * n;
                    for (std::size_t l = 0; l < k; ++l) {
                        const double av = pa[i * k + l];
                        if (av == 0.0) continue;
                        double* drow = db + l * n;
                        for (std::size_t j = 0; j < n; ++j) drow[j] += av * grow[j];
                    }
                }
            }
        });
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    require(a.ndim() == 2, "transpose: expects a 2-d tensor");
    const std::size_t m = a.shape()[0], n = a.shape()[1];
    Tensor out = Tensor::zeros({n, m});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out.values()[j * m + i] = a.values()[i * n + j];
    }
    if (should_record({&a})) {
        record_op(out, [ai = a.impl(), oi = out.impl(), m, n]() {
            double* da = ai->ensure_grad();
            const double* g = oi->grad.data();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) da[i * n + j] += g[j * m + i];
            }
        });
    }
    return out;
}

// ---- concat -------------------------------------------------------------------

Tensor concat(const Tensor& a, const Tensor& b, int axis) {
    require(a.ndim() == b.ndim(), "concat: rank mismatch");
    require(axis == 0 || axis == 1, "concat: axis must be 0 or 1");
    if (a.ndim() == 1) {
        require(axis == 0, "concat: 1-d tensors concatenate along axis 0");
        const std::size_t na = a.numel(), nb = b.numel();
        Tensor out = Tensor::zeros({na + nb});
        std::copy(a.values().begin(), a.values().end(), out.values().begin());
        std::copy(b.values().begin(), b.values().end(), out.values().begin() + na);
        if (should_record({&a, &b})) {
            record_op(out, [ai = a.impl(), bi = b.impl(), oi = out.impl(), na, nb]() {
                const double* g = oi->grad.data();
                if (ai->requires_grad) {
                    double* da = ai->ensure_grad();
                    for (std::size_t i = 0; i < na; ++i) da[i] += g[i];
                }
                if (bi->requires_grad) {
                    double* db = bi->ensure_grad();
                    for (std::size_t i = 0; i < nb; ++i) db[i] += g[na + i];
                }
            });
        }
        return out;
    }
    require(a.ndim() == 2, "concat: expects 1-d or 2-d tensors");
    const std::size_t ra = a.shape()[0], ca = a.shape()[1];
    const std::size_t rb = b.shape()[0], cb = b.shape()[1];
    Tensor out;
    if (axis == 0) {
        require(ca == cb, "concat axis 0: column mismatch");
        out = Tensor::zeros({ra + rb, ca});
        std::copy(a.values().begin(), a.values().end(), out.values().begin());
        std::copy(b.values().begin(), b.values().end(), out.values().begin() + ra * ca);
    } else {
        require(ra == rb, "concat axis 1: row mismatch");
        out = Tensor::zeros({ra, ca + cb});
        for (std::size_t r = 0; r < ra; ++r) {
            std::copy(a.values().begin() + r * ca, a.values().begin() + (r + 1) * ca,
                      out.values().begin() + r * (ca + cb));
            std::copy(b.values().begin() + r * cb, b.values().begin() + (r + 1) * cb,
                      out.values().begin() + r * (ca + cb) + ca);
        }
    }
    if (should_record({&a, &b})) {
        record_op(out, [ai = a.impl(), bi = b.impl(), oi = out.impl(), ra, ca, rb, cb, axis]() {
            const double* g = oi->grad.data();
            if (axis == 0) {
                if (ai->requires_grad) {
                    double* da = ai->ensure_grad();
                    for (std::size_t i = 0; i < ra * ca; ++i) da[i] += g[i];
                }
                if (bi->requires_grad) {
                    double* db = bi->ensure_grad();
                    for (std::size_t i = 0; i < rb * cb; ++i) db[i] += g[ra * ca + i];
                }
            } else {
                const std::size_t stride = ca + cb;
                if (ai->requires_grad) {
                    double* da = ai->ensure_grad();
                    for (std::size_t r = 0; r < ra; ++r) {
                        for (std::size_t c = 0; c < ca; ++c) da[r * ca + c] += g[r * stride + c];
                    }
                }
                if (bi->requires_grad) {
                    double* db = bi->ensure_grad();
                    for (std::size_t r = 0; r < ra; ++r) {
                        for (std::size_t c = 0; c < cb; ++c)
                            db[r * cb + c] += g[r * stride + ca + c];
                    }
                }
            }
        });
    }
    return out;
}

// ---- gather / scatter -----------------------------------------------------------

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& index) {
    require(x.ndim() == 1 || x.ndim() == 2, "gather_rows: expects 1-d or 2-d tensor");
    const std::size_t n_rows = x.shape()[0];
    const std::size_t width = (x.ndim() == 2) ? x.shape()[1] : 1;
    for (std::size_t idx : index) {
        require(idx < n_rows, "gather_rows: index " + std::to_string(idx) + " out of range " +
                                  std::to_string(n_rows));
    }
    Tensor out = (x.ndim() == 2) ? Tensor::zeros({index.size(), width})
                                 : Tensor::zeros({index.size()});
    const double* px = x.values().data();
    double* po = out.values().data();
    for (std::size_t r = 0; r < index.size(); ++r) {
        std::copy(px + index[r] * width, px + (index[r] + 1) * width, po + r * width);
    }
    if (should_record({&x})) {
        record_op(out, [xi = x.impl(), oi = out.impl(), index, width]() {
            double* dx = xi->ensure_grad();
            const double* g = oi->grad.data();
            for (std::size_t r = 0; r < index.size(); ++r) {
                double* drow = dx + index[r] * width;
                const double* grow = g + r * width;
                for (std::size_t c = 0; c < width; ++c) drow[c] += grow[c];
            }
        });
    }
    return out;
}

Tensor scatter_add_rows(const Tensor& x, const std::vector<std::size_t>& index,
                        std::size_t out_rows) {
    require(x.ndim() == 1 || x.ndim() == 2, "scatter_add_rows: expects 1-d or 2-d tensor");
    require(index.size() == x.shape()[0], "scatter_add_rows: one index per input row");
    const std::size_t width = (x.ndim() == 2) ? x.shape()[1] : 1;
    for (std::size_t idx : index) {
        require(idx < out_rows, "scatter_add_rows: index out of range");
    }
    Tensor out = (x.ndim() == 2) ? Tensor::zeros({out_rows, width}) : Tensor::zeros({out_rows});
    const double* px = x.values().data();
    double* po = out.values().data();
    for (std::size_t r = 0; r < index.size(); ++r) {
        double* orow = po + index[r] * width;
        const double* xrow = px + r * width;
        for (std::size_t c = 0; c < width; ++c) orow[c] += xrow[c];
    }
    if (should_record({&x})) {
        record_op(out, [xi = x.impl(), oi = out.impl(), index, width]() {
            double* dx = xi->ensure_grad();
            const double* g = oi->grad.data();
            for (std::size_t r = 0; r < index.size(); ++r) {
                const double* grow = g + index[r] * width;
                double* drow = dx + r * width;
                for (std::size_t c = 0; c < width; ++c) drow[c] += grow[c];
            }
        });
    }
    return out;
}

// ---- row-structured ops -----------------------------------------------------------

Tensor scale_rows(const Tensor& x, const Tensor& s) {
    require(x.ndim() == 2, "scale_rows: x must be 2-d");
    const std::size_t n = x.shape()[0], d = x.shape()[1];
    require(s.numel() == n, "scale_rows: one scale per row");
    Tensor out = Tensor::zeros(x.shape());
    const double* px = x.values().data();
    const double* ps = s.values().data();
    double* po = out.values().data();
    for (std::size_t r = 0; r < n; ++r) {
        const double sv = ps[r];
        for (std::size_t c = 0; c < d; ++c) po[r * d + c] = px[r * d + c] * sv;
    }
    if (should_record({&x, &s})) {
        record_op(out, [xi = x.impl(), si = s.impl(), oi = out.impl(), n, d]() {
            const double* g = oi->grad.data();
            if (xi->requires_grad) {
                double* dx = xi->ensure_grad();
                const double* ps = si->value.data();
                for (std::size_t r = 0; r < n; ++r) {
                    const double sv = ps[r];
                    for (std::size_t c = 0; c < d; ++c) dx[r * d + c] += g[r * d + c] * sv;
                }
            }
            if (si->requires_grad) {
                double* ds = si->ensure_grad();
                const double* px = xi->value.data();
                for (std::size_t r = 0; r < n; ++r) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < d; ++c) acc += g[r * d + c] * px[r * d + c];
                    ds[r] += acc;
                }
            }
        });
    }
    return out;
}

Tensor add_rowvec(const Tensor& x, const Tensor& b) {
    require(x.ndim() == 2, "add_rowvec: x must be 2-d");
    const std::size_t n = x.shape()[0], d = x.shape()[1];
    require(b.numel() == d, "add_rowvec: bias length must equal columns");
    Tensor out = Tensor::zeros(x.shape());
    const double* px = x.values().data();
    const double* pb = b.values().data();
    double* po = out.values().data();
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) po[r * d + c] = px[r * d + c] + pb[c];
    }
    if (should_record({&x, &b})) {
        record_op(out, [xi = x.impl(), bi = b.impl(), oi = out.impl(), n, d]() {
            const double* g = oi->grad.data();
            if (xi->requires_grad) {
                double* dx = xi->ensure_grad();
                for (std::size_t i = 0; i < n * d; ++i) dx[i] += g[i];
            }
            if (bi->requires_grad) {
                double* db = bi->ensure_grad();
                for (std::size_t r = 0; r < n; ++r) {
                    for (std::size_t c = 0; c < d; ++c) db[c] += g[r * d + c];
                }
            }
        });
    }
    return out;
}

// ---- elementwise unary -----------------------------------------------------------

template <typename Fwd, typename Adj>
static Tensor unary_op(const Tensor& x, Fwd fwd, Adj adj) {
    Tensor out = Tensor::zeros(x.shape());
    const std::size_t n = x.numel();
    const double* px = x.values().data();
    double* po = out.values().data();
    for (std::size_t i = 0; i < n; ++i) po[i] = fwd(px[i]);
    if (should_record({&x})) {
        record_op(out, [xi = x.impl(), oi = out.impl(), adj]() {
            double* dx = xi->ensure_grad();
            const double* g = oi->grad.data();
            const double* px = xi->value.data();
            const double* py = oi->value.data();
            for (std::size_t i = 0; i < oi->numel(); ++i) dx[i] += adj(g[i], px[i], py[i]);
        });
    }
    return out;
}

Tensor relu(const Tensor& x) {
    return unary_op(
        x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double g, double v, double) { return v > 0.0 ? g : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
    return unary_op(
        x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
        [](double g, double, double y) { return g * y * (1.0 - y); });
}

Tensor exp(const Tensor& x) {
    return unary_op(
        x, [](double v) { return std::exp(v); },
        [](double g, double, double y) { return g * y; });
}

Tensor log(const Tensor& x) {
    return unary_op(
        x, [](double v) { return std::log(v); },
        [](double g, double v, double) { return g / v; });
}

// ---- softmax ----------------------------------------------------------------------

Tensor softmax_rows(const Tensor& x) {
    require(x.ndim() == 2, "softmax_rows: expects a 2-d tensor");
    const std::size_t n = x.shape()[0], d = x.shape()[1];
    Tensor out = Tensor::zeros(x.shape());
    const double* px = x.values().data();
    double* po = out.values().data();
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = px + r * d;
        double mx = row[0];
        for (std::size_t c = 1; c < d; ++c) mx = std::max(mx, row[c]);
        double total = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            po[r * d + c] = std::exp(row[c] - mx);
            total += po[r * d + c];
        }
        for (std::size_t c = 0; c < d; ++c) po[r * d + c] /= total;
    }
    if (should_record({&x})) {
        record_op(out, [xi = x.impl(), oi = out.impl(), n, d]() {
            double* dx = xi->ensure_grad();
            const double* g = oi->grad.data();
            const double* p = oi->value.data();
            for (std::size_t r = 0; r < n; ++r) {
                double dot = 0.0;
                for (std::size_t c = 0; c < d; ++c) dot += g[r * d + c] * p[r * d + c];
                for (std::size_t c = 0; c < d; ++c) {
                    dx[r * d + c] += p[r * d + c] * (g[r * d + c] - dot);
                }
            }
        });
    }
    return out;
}

Tensor log_softmax_rows(const Tensor& x) {
    require(x.ndim() == 2, "log_softmax_rows: expects a 2-d tensor");
    const std::size_t n = x.shape()[0], d = x.shape()[1];
    Tensor out = Tensor::zeros(x.shape());
    const double* px = x.values().data();
    double* po = out.values().data();
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = px + r * d;
        double mx = row[0];
        for (std::size_t c = 1; c < d; ++c) mx = std::max(mx, row[c]);
        double total = 0.0;
        for (std::size_t c = 0; c < d; ++c) total += std::exp(row[c] - mx);
        const double lse = mx + std::log(total);
        for (std::size_t c = 0; c < d; ++c) po[r * d + c] = row[c] - lse;
    }
    if (should_record({&x})) {
        record_op(out, [xi = x.impl(), oi = out.impl(), n, d]() {
            double* dx = xi->ensure_grad();
            const double* g = oi->grad.data();
            const double* y = oi->value.data();
            for (std::size_t r = 0; r < n; ++r) {
                double gsum = 0.0;
                for (std::size_t c = 0; c < d; ++c) gsum += g[r * d + c];
                for (std::size_t c = 0; c < d; ++c) {
                    dx[r * d + c] += g[r * d + c] - std::exp(y[r * d + c]) * gsum;
                }
            }
        });
    }
    return out;
}

// ---- reductions -------------------------------------------------------------------

Tensor sum(const Tensor& x) {
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    Tensor out = Tensor::scalar(acc);
    if (should_record({&x})) {
        record_op(out, [xi = x.impl(), oi = out.impl()]() {
            double* dx = xi->ensure_grad();
            const double g = oi->grad[0];
            for (std::size_t i = 0; i < xi->numel(); ++i) dx[i] += g;
        });
    }
    return out;
}

Tensor mean(const Tensor& x) {
    require(x.numel() > 0, "mean: empty tensor");
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    const double inv = 1.0 / static_cast<double>(x.numel());
    Tensor out = Tensor::scalar(acc * inv);
    if (should_record({&x})) {
        record_op(out, [xi = x.impl(), oi = out.impl(), inv]() {
            double* dx = xi->ensure_grad();
            const double g = oi->grad[0] * inv;
            for (std::size_t i = 0; i < xi->numel(); ++i) dx[i] += g;
        });
    }
    return out;
}

Tensor sum_rows(const Tensor& x) {
    require(x.ndim() == 2, "sum_rows: expects a 2-d tensor");
    const std::size_t n = x.shape()[0], d = x.shape()[1];
    Tensor out = Tensor::zeros({n});
    for (std::size_t r = 0; r < n; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) acc += x.values()[r * d + c];
        out.values()[r] = acc;
    }
    if (should_record({&x})) {
        record_op(out, [xi = x.impl(), oi = out.impl(), n, d]() {
            double* dx = xi->ensure_grad();
            const double* g = oi->grad.data();
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t c = 0; c < d; ++c) dx[r * d + c] += g[r];
            }
        });
    }
    return out;
}

template <bool kMax>
static Tensor extremum(const Tensor& x) {
    require(x.numel() > 0, "min/max: empty tensor");
    const double* px = x.values().data();
    std::size_t arg = 0;
    for (std::size_t i = 1; i < x.numel(); ++i) {
        if (kMax ? (px[i] > px[arg]) : (px[i] < px[arg])) arg = i;
    }
    Tensor out = Tensor::scalar(px[arg]);
    if (should_record({&x})) {
        record_op(out, [xi = x.impl(), oi = out.impl(), arg]() {
            xi->ensure_grad()[arg] += oi->grad[0];
        });
    }
    return out;
}

Tensor min(const Tensor& x) { return extremum<false>(x); }
Tensor max(const Tensor& x) { return extremum<true>(x); }

// ---- per-row dot / diag -------------------------------------------------------------

Tensor dot_rows(const Tensor& a, const Tensor& b) {
    require(a.ndim() == 2 && b.ndim() == 2 && a.shape() == b.shape(),
            "dot_rows: expects equal-shape 2-d tensors");
    const std::size_t n = a.shape()[0], d = a.shape()[1];
    Tensor out = Tensor::zeros({n});
    const double* pa = a.values().data();
    const double* pb = b.values().data();
    for (std::size_t r = 0; r < n; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) acc += pa[r * d + c] * pb[r * d + c];
        out.values()[r] = acc;
    }
    if (should_record({&a, &b})) {
        record_op(out, [ai = a.impl(), bi = b.impl(), oi = out.impl(), n, d]() {
            const double* g = oi->grad.data();
            if (ai->requires_grad) {
                double* da = ai->ensure_grad();
                const double* pb = bi->value.data();
                for (std::size_t r = 0; r < n; ++r) {
                    for (std::size_t c = 0; c < d; ++c) da[r * d + c] += g[r] * pb[r * d + c];
                }
            }
            if (bi->requires_grad) {
                double* db = bi->ensure_grad();
                const double* pa = ai->value.data();
                for (std::size_t r = 0; r < n; ++r) {
                    for (std::size_t c = 0; c < d; ++c) db[r * d + c] += g[r] * pa[r * d + c];
                }
            }
        });
    }
    return out;
}

Tensor take_diag(const Tensor& x) {
    require(x.ndim() == 2 && x.shape()[0] == x.shape()[1], "take_diag: expects a square matrix");
    const std::size_t n = x.shape()[0];
    Tensor out = Tensor::zeros({n});
    for (std::size_t i = 0; i < n; ++i) out.values()[i] = x.values()[i * n + i];
    if (should_record({&x})) {
        record_op(out, [xi = x.impl(), oi = out.impl(), n]() {
            double* dx = xi->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) dx[i * n + i] += oi->grad[i];
        });
    }
    return out;
}

Tensor reshape(const Tensor& x, std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    require(n == x.numel(), "reshape: size mismatch");
    Tensor out = Tensor::from_data(std::move(shape), x.values());
    if (should_record({&x})) {
        record_op(out, [xi = x.impl(), oi = out.impl()]() {
            double* dx = xi->ensure_grad();
            const double* g = oi->grad.data();
            for (std::size_t i = 0; i < oi->numel(); ++i) dx[i] += g[i];
        });
    }
    return out;
}

// ---- gradient checking ----------------------------------------------------------------

GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                           double tol, double h) {
    // Tape gradient.
    Tensor xp = Tensor::parameter(x.shape(), x.values());
    std::vector<double> tape_grad;
    {
        Tape tape;
        Tensor y = f(xp);
        if (y.numel() != 1) throw NonScalarLoss("grad_check: f must be scalar-valued");
        tape.backward(y);
        tape_grad = xp.grad();
    }

    auto eval_at = [&](std::vector<double> values) {
        Tensor probe = Tensor::from_data(x.shape(), std::move(values));
        return f(probe).item();
    };

    GradCheckReport report;
    std::vector<double> base = x.values();
    const double f0 = eval_at(base);
    for (std::size_t i = 0; i < base.size(); ++i) {
        std::vector<double> up = base, down = base;
        up[i] += h;
        down[i] -= h;
        const double fu = eval_at(std::move(up));
        const double fd = eval_at(std::move(down));
        const double central = (fu - fd) / (2.0 * h);
        const double fwd_slope = (fu - f0) / h;
        const double bwd_slope = (f0 - fd) / h;
        const double slope_scale = std::max({1.0, std::abs(fwd_slope), std::abs(bwd_slope)});
        if (std::abs(fwd_slope - bwd_slope) > 1e-2 * slope_scale) {
            report.non_smooth_coords.push_back(i);
            continue;
        }
        const double denom = std::max({1.0, std::abs(central), std::abs(tape_grad[i])});
        report.max_rel_error =
            std::max(report.max_rel_error, std::abs(central - tape_grad[i]) / denom);
    }
    report.passed = report.max_rel_error <= tol;
    return report;
}

}  // namespace mccl
