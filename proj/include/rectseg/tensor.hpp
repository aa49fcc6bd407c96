#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rectseg/rng.hpp"

namespace rectseg {

enum class Mode { train, eval };

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
std::int64_t shape_numel(const Shape& s);

namespace detail {

struct TensorState {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad; // allocated iff requires_grad
    bool requires_grad = false;
    bool is_leaf = true;
    bool grad_fresh = false; // set by backward, cleared by the optimizer

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

} // namespace detail

// Dense float64 tensor participating in a reverse-mode graph. Copying a
// Tensor copies the handle, not the storage.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double v, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return st_ != nullptr; }
    const Shape& shape() const { return st_->shape; }
    std::int64_t size() const { return static_cast<std::int64_t>(st_->value.size()); }
    bool requires_grad() const { return st_ && st_->requires_grad; }

    std::vector<double>& data() { return st_->value; }
    const std::vector<double>& data() const { return st_->value; }
    const std::vector<double>& grad() const;

    // scalar access; throws unless size() == 1
    double item() const;

    bool same_state(const Tensor& other) const { return st_ == other.st_; }

    std::shared_ptr<detail::TensorState> state() const { return st_; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorState> st) : st_(std::move(st)) {}
    std::shared_ptr<detail::TensorState> st_;

    friend class Graph;
    friend Tensor make_op_output(Shape shape, std::vector<double> value, bool track);
};

// Recording scope for one forward pass. Exactly one Graph may be active per
// thread; ops record backward steps into it while it is alive. backward()
// consumes the recording; a second call is rejected.
class Graph {
public:
    Graph();
    ~Graph();
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    void backward(const Tensor& loss);

    std::size_t node_count() const { return steps_.size(); }

    static Graph* active();
    static bool recording() { return active() != nullptr; }

    void add_step(std::function<void()> fn) { steps_.push_back(std::move(fn)); }

private:
    std::vector<std::function<void()>> steps_;
    bool consumed_ = false;
};

// --- elementwise ops (equal shapes or scalar operand) ---
Tensor add(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, double b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a); // inputs must be strictly positive
Tensor relu(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);

// --- structured ops ---
// x: [H,W,Cin], k: [kh,kw,Cin,Cout] with odd kh/kw, bias: [Cout]; zero "same"
// padding so the output is [H,W,Cout].
Tensor conv2d(const Tensor& x, const Tensor& k, const Tensor& bias);

// log-softmax over the last axis, max-subtraction stabilized
Tensor log_softmax(const Tensor& x);

// inverted dropout; eval mode is the identity and consumes no rng draws
Tensor dropout(const Tensor& x, double rate, Mode mode, Rng& rng);

Tensor sum(const Tensor& x);           // -> scalar, shape {1}
Tensor sum_last_axis(const Tensor& x); // [..., C] -> [...]

// cuts the tensor out of the gradient flow (value is shared by copy)
Tensor detach(const Tensor& x);

// Plain SGD with optional momentum. Velocity buffers are owned here; grads
// are cleared after each step.
class SgdOptimizer {
public:
    explicit SgdOptimizer(std::vector<Tensor> params, double momentum = 0.9);

    void step(double lr);

    const std::vector<Tensor>& params() const { return params_; }
    double momentum() const { return momentum_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> velocity_;
    double momentum_;
};

} // namespace rectseg
