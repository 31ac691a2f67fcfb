#include "vqcnir/tensor.hpp"

#include "vqcnir/errors.hpp"

#include <algorithm>
#include <sstream>

namespace vqcnir {

namespace {

thread_local bool g_grad_enabled = true;

TensorImpl& checked(const std::shared_ptr<TensorImpl>& impl)
{
    if (!impl) {
        throw ContractError("use of an undefined tensor");
    }
    return *impl;
}

} // namespace

Index shape_numel(const Shape& shape)
{
    Index n = 1;
    for (Index e : shape) {
        if (e < 0) {
            throw DimensionError("negative extent in shape " + shape_str(shape));
        }
        n *= e;
    }
    return n;
}

std::string shape_str(const Shape& shape)
{
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "," : "") << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad)
{
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad)
{
    auto impl = std::make_shared<TensorImpl>();
    impl->data.assign(static_cast<std::size_t>(shape_numel(shape)), value);
    impl->shape = std::move(shape);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad)
{
    if (shape_numel(shape) != static_cast<Index>(values.size())) {
        throw DimensionError("shape " + shape_str(shape) + " does not hold " +
                             std::to_string(values.size()) + " values");
    }
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(values);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad)
{
    return from({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return checked(impl_).shape; }

Index Tensor::dim(std::size_t axis) const
{
    const Shape& s = shape();
    if (axis >= s.size()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                             shape_str(s));
    }
    return s[axis];
}

Index Tensor::numel() const { return static_cast<Index>(checked(impl_).data.size()); }

std::span<const double> Tensor::data() const { return checked(impl_).data; }

std::span<double> Tensor::mutable_data() { return checked(impl_).data; }

double Tensor::item() const
{
    const auto& d = checked(impl_).data;
    if (d.size() != 1) {
        throw ContractError("item() on tensor of shape " + shape_str(impl_->shape));
    }
    return d[0];
}

double Tensor::at(std::initializer_list<Index> idx) const
{
    const Shape& s = shape();
    if (idx.size() != s.size()) {
        throw DimensionError("index rank mismatch for shape " + shape_str(s));
    }
    Index flat = 0;
    std::size_t a = 0;
    for (Index i : idx) {
        if (i < 0 || i >= s[a]) {
            throw DimensionError("index out of range on axis " + std::to_string(a));
        }
        flat = flat * s[a] + i;
        ++a;
    }
    return impl_->data[static_cast<std::size_t>(flat)];
}

bool Tensor::requires_grad() const { return checked(impl_).requires_grad; }

void Tensor::set_requires_grad(bool on) { checked(impl_).requires_grad = on; }

bool Tensor::has_grad() const { return !checked(impl_).grad.empty(); }

std::span<const double> Tensor::grad() const { return checked(impl_).grad; }

std::span<double> Tensor::mutable_grad() { return checked(impl_).grad; }

void Tensor::zero_grad()
{
    auto& g = checked(impl_).grad;
    std::fill(g.begin(), g.end(), 0.0);
}

void Tensor::clear_grad()
{
    auto& g = checked(impl_).grad;
    g.clear();
    g.shrink_to_fit();
}

Tensor Tensor::detach() const
{
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = shape();
    impl->data = impl_->data;
    return Tensor(std::move(impl));
}

Tensor Tensor::clone() const
{
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = shape();
    impl->data = impl_->data;
    impl->requires_grad = impl_->requires_grad;
    return Tensor(std::move(impl));
}

void Tape::record(std::shared_ptr<TensorImpl> output, BackwardFn fn)
{
    entries_.push_back(Entry{std::move(output), std::move(fn)});
}

Tape& Tape::active()
{
    thread_local Tape tape;
    return tape;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

void backward(const Tensor& loss)
{
    if (!loss.defined() || loss.numel() != 1) {
        throw ContractError("backward() requires a scalar loss, got shape " +
                            (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
    }
    if (!loss.requires_grad()) {
        throw ContractError("backward() on a loss that does not depend on any trainable tensor");
    }
    Tape& tape = Tape::active();
    auto g = autograd::grad_of(loss.impl());
    g[0] += 1.0;
    const auto& entries = tape.entries();
    for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
        if (it->output->grad.empty()) {
            continue; // not on a path to the loss
        }
        it->backward(*it->output);
    }
    // Intermediate results die with the tape; only leaves keep their buffers.
    tape.clear();
}

namespace autograd {

std::span<double> grad_of(const std::shared_ptr<TensorImpl>& t)
{
    if (!t->requires_grad) {
        return {};
    }
    if (t->grad.empty()) {
        t->grad.assign(t->data.size(), 0.0);
    }
    return t->grad;
}

std::span<double> grad_of(const Tensor& t) { return grad_of(t.impl()); }

namespace {

Tensor build(Shape shape, std::vector<double> values, bool needs_grad, Tape::BackwardFn fn)
{
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(values);
    if (shape_numel(impl->shape) != static_cast<Index>(impl->data.size())) {
        throw DimensionError("op result size does not match shape " + shape_str(impl->shape));
    }
    if (needs_grad) {
        impl->requires_grad = true;
        Tape::active().record(impl, std::move(fn));
    }
    return Tensor(std::move(impl));
}

} // namespace

Tensor make_result(Shape shape, std::vector<double> values,
                   std::initializer_list<const Tensor*> inputs, Tape::BackwardFn fn)
{
    bool needs = false;
    if (g_grad_enabled) {
        for (const Tensor* t : inputs) {
            if (t && t->defined() && t->requires_grad()) {
                needs = true;
                break;
            }
        }
    }
    return build(std::move(shape), std::move(values), needs, std::move(fn));
}

Tensor make_result(Shape shape, std::vector<double> values, const std::vector<Tensor>& inputs,
                   Tape::BackwardFn fn)
{
    bool needs = false;
    if (g_grad_enabled) {
        for (const Tensor& t : inputs) {
            if (t.defined() && t.requires_grad()) {
                needs = true;
                break;
            }
        }
    }
    return build(std::move(shape), std::move(values), needs, std::move(fn));
}

} // namespace autograd

} // namespace vqcnir
