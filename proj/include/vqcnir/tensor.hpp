#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vqcnir {

using Index = std::int64_t;
using Shape = std::vector<Index>;

Index shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad; // empty until first accumulation
    bool requires_grad = false;
};

/// Shared handle to an N-d array of doubles in row-major order.
///
/// Values are immutable once an operation has produced them; only parameter
/// tensors are updated in place, and only by an optimizer between steps.
/// Gradient buffers are allocated lazily on first accumulation.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const;
    Index dim(std::size_t axis) const;
    std::size_t rank() const { return shape().size(); }
    Index numel() const;

    std::span<const double> data() const;
    /// In-place access for parameter updates and initialisation.
    std::span<double> mutable_data();
    double item() const;
    double at(std::initializer_list<Index> idx) const;

    bool requires_grad() const;
    void set_requires_grad(bool on);

    bool has_grad() const;
    std::span<const double> grad() const;
    std::span<double> mutable_grad();
    void zero_grad();
    void clear_grad();

    /// Same values, new leaf without gradient linkage.
    Tensor detach() const;
    /// Deep copy (new storage); keeps requires_grad.
    Tensor clone() const;

    const std::shared_ptr<TensorImpl>& impl() const { return impl_; }
    bool same(const Tensor& other) const { return impl_ == other.impl_; }

private:
    std::shared_ptr<TensorImpl> impl_;
};

/// Ordered record of differentiable operations for reverse-mode replay.
///
/// Each thread owns one active tape. Operations whose inputs carry
/// requires_grad append an entry; backward() replays entries in reverse
/// recording order and then clears the tape.
class Tape {
public:
    using BackwardFn = std::function<void(const TensorImpl& out)>;

    struct Entry {
        std::shared_ptr<TensorImpl> output;
        BackwardFn backward;
    };

    void record(std::shared_ptr<TensorImpl> output, BackwardFn fn);
    void clear() { entries_.clear(); }
    std::size_t size() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }

    /// The calling thread's active tape.
    static Tape& active();

private:
    std::vector<Entry> entries_;
};

/// Disables tape recording on this thread for the guard's lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

/// Seeds d(loss)/d(loss) = 1 and replays the active tape in reverse.
/// Throws ContractError unless loss is a single-element tensor on the tape.
void backward(const Tensor& loss);

namespace autograd {

/// Builds an op result. If recording is enabled and any input requires a
/// gradient, the result requires one too and `fn` is recorded on the tape.
Tensor make_result(Shape shape, std::vector<double> values,
                   std::initializer_list<const Tensor*> inputs, Tape::BackwardFn fn);
Tensor make_result(Shape shape, std::vector<double> values,
                   const std::vector<Tensor>& inputs, Tape::BackwardFn fn);

/// Gradient buffer of `t`, allocated on demand. Empty span if t needs no gradient.
std::span<double> grad_of(const std::shared_ptr<TensorImpl>& t);
std::span<double> grad_of(const Tensor& t);

} // namespace autograd

} // namespace vqcnir
