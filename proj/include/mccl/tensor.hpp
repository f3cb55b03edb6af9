#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mccl {

namespace detail {
struct TensorImpl {
    std::vector<std::size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;   // allocated lazily, same length as value
    bool requires_grad = false; // participates in the grad graph
    bool leaf = false;          // user-created parameter (grads survive backward)

    std::size_t numel() const { return value.size(); }
    double* ensure_grad();
};
}  // namespace detail

/// Dense row-major tensor of 64-bit floats. Copies share storage; the tape
/// holds references to everything it needs for the backward pass.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double fill);
    static Tensor from_data(std::vector<std::size_t> shape, std::vector<double> data);
    static Tensor scalar(double v);
    /// Leaf tensor with requires_grad set; gradients accumulate across
    /// backward calls until zero_grad().
    static Tensor parameter(std::vector<std::size_t> shape, std::vector<double> data);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<std::size_t>& shape() const { return impl_->shape; }
    std::size_t numel() const { return impl_->numel(); }
    std::size_t ndim() const { return impl_->shape.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    std::vector<double>& values() { return impl_->value; }
    const std::vector<double>& values() const { return impl_->value; }
    /// Gradient accumulator; allocates (zero-filled) on first access.
    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    bool requires_grad() const { return impl_ && impl_->requires_grad; }
    bool is_leaf() const { return impl_ && impl_->leaf; }
    void zero_grad();

    /// Value of a 1-element tensor.
    double item() const;

    std::shared_ptr<detail::TensorImpl> impl() const { return impl_; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<detail::TensorImpl> impl_;

    friend class Tape;
    friend Tensor make_op_output(std::vector<std::size_t> shape);
};

/// Ordered record of primitive operations. While a Tape is alive on the
/// current thread, any primitive whose inputs require grad appends its
/// adjoint closure. backward() replays the records in reverse creation order
/// (a valid reverse topological order, since inputs always precede outputs).
///
/// Tapes nest as a stack per thread; distinct threads own distinct tapes.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Accumulates d(loss)/d(leaf) into every requires_grad leaf.
    /// Non-leaf gradients are reset at the start of each call, so calling
    /// backward twice adds the same leaf gradients twice.
    void backward(const Tensor& loss);

    std::size_t num_records() const { return records_.size(); }

    static Tape* active();
    void record(std::shared_ptr<detail::TensorImpl> output, std::function<void()> adjoint);

private:
    struct Record {
        std::shared_ptr<detail::TensorImpl> output;
        std::function<void()> adjoint;
    };
    std::vector<Record> records_;
    Tape* previous_ = nullptr;
};

// ---- primitives ------------------------------------------------------------
// Each returns the forward value and, when a tape is active and any input
// requires grad, records the adjoint. Shape rules are checked eagerly and
// violations raise ShapeMismatch.

/// Elementwise binary ops; operands must have equal shapes, or one of them
/// may be a 1-element tensor which broadcasts against the other.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// Concatenate along `axis` (0 or 1). 1-D tensors support axis 0 only.
Tensor concat(const Tensor& a, const Tensor& b, int axis);

/// out[r] = x[index[r]] for 2-D x (rows) or 1-D x (elements).
Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& index);
/// out has `out_rows` rows; out[index[r]] += x[r]. Adjoint of gather_rows.
Tensor scatter_add_rows(const Tensor& x, const std::vector<std::size_t>& index,
                        std::size_t out_rows);

/// Multiply row r of x by s[r]; s must have numel == rows(x).
Tensor scale_rows(const Tensor& x, const Tensor& s);
/// Add bias vector b (numel == cols(x)) to every row of x.
Tensor add_rowvec(const Tensor& x, const Tensor& b);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);

Tensor softmax_rows(const Tensor& x);
Tensor log_softmax_rows(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor sum_rows(const Tensor& x);

/// Reductions to a 1-element tensor. The subgradient is routed to the
/// arg-extreme element; ties go to the lowest index.
Tensor min(const Tensor& x);
Tensor max(const Tensor& x);

/// Per-row dot product of equal-shape 2-D tensors -> 1-D tensor.
Tensor dot_rows(const Tensor& a, const Tensor& b);
/// Diagonal of a square matrix -> 1-D tensor.
Tensor take_diag(const Tensor& x);
/// Same elements, new shape (sizes must agree).
Tensor reshape(const Tensor& x, std::vector<std::size_t> shape);

// ---- gradient checking -----------------------------------------------------

struct GradCheckReport {
    /// max over smooth coordinates of |tape - fd| / max(1, |tape|, |fd|)
    double max_rel_error = 0.0;
    /// coordinates excluded because the one-sided slopes disagree (kinks)
    std::vector<std::size_t> non_smooth_coords;
    bool passed = false;
};

/// Compares the tape gradient of the scalar-valued f against central finite
/// differences (f(x+h) - f(x-h)) / 2h, coordinate by coordinate. Coordinates
/// where the forward and backward one-sided slopes disagree by more than 1%
/// are flagged as non-smooth (e.g. relu evaluated at a kink) and excluded
/// from the pass/fail decision.
GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f,
                           const Tensor& x, double tol, double h = 1e-5);

}  // namespace mccl
