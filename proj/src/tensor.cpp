#include "rectseg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rectseg {

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << ",";
        os << s[i];
    }
    os << "]";
    return os.str();
}

std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (int d : s) {
        if (d <= 0) throw std::invalid_argument("tensor extents must be positive, got " + shape_str(s));
        n *= d;
    }
    return n;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
    auto n = shape_numel(shape);
    return from_data(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), v), requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
    if (shape_numel(shape) != static_cast<std::int64_t>(data.size()))
        throw std::invalid_argument("data length " + std::to_string(data.size()) +
                                    " does not match shape " + shape_str(shape));
    auto st = std::make_shared<detail::TensorState>();
    st->shape = std::move(shape);
    st->value = std::move(data);
    st->requires_grad = requires_grad;
    if (requires_grad) st->ensure_grad();
    return Tensor(std::move(st));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_data({1}, {v}, requires_grad);
}

const std::vector<double>& Tensor::grad() const {
    if (!st_ || !st_->requires_grad) throw std::runtime_error("tensor has no gradient buffer");
    return st_->grad;
}

double Tensor::item() const {
    if (size() != 1) throw std::invalid_argument("item() requires a scalar tensor, shape is " + shape_str(shape()));
    return st_->value[0];
}

// ---------------------------------------------------------------------------
// Graph

namespace {
thread_local Graph* g_active_graph = nullptr;
} // namespace

Graph::Graph() {
    if (g_active_graph)
        throw std::runtime_error("a recording graph is already active on this thread");
    g_active_graph = this;
}

Graph::~Graph() {
    if (g_active_graph == this) g_active_graph = nullptr;
}

Graph* Graph::active() { return g_active_graph; }

void Graph::backward(const Tensor& loss) {
    if (consumed_) throw std::runtime_error("backward: this recording has already been consumed");
    if (!loss.defined() || loss.size() != 1)
        throw std::invalid_argument("backward: loss must be a scalar tensor");
    if (!loss.requires_grad())
        throw std::invalid_argument("backward: loss does not depend on any tracked tensor");
    consumed_ = true;
    auto st = loss.state();
    st->ensure_grad();
    st->grad[0] += 1.0;
    st->grad_fresh = true;
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

// ---------------------------------------------------------------------------
// op plumbing

Tensor make_op_output(Shape shape, std::vector<double> value, bool track) {
    auto st = std::make_shared<detail::TensorState>();
    st->shape = std::move(shape);
    st->value = std::move(value);
    st->requires_grad = track;
    st->is_leaf = false;
    if (track) st->ensure_grad();
    return Tensor(std::move(st));
}

namespace {

using State = std::shared_ptr<detail::TensorState>;

bool tracks(const Tensor& t) { return Graph::recording() && t.requires_grad(); }

void accumulate(const State& dst, const std::vector<double>& g) {
    if (!dst->requires_grad) return;
    dst->ensure_grad();
    double* a = dst->grad.data();
    const double* b = g.data();
    const std::size_t n = dst->grad.size();
    for (std::size_t i = 0; i < n; ++i) a[i] += b[i];
    dst->grad_fresh = true;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
}

} // namespace

// ---------------------------------------------------------------------------
// elementwise

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    const auto& av = a.data();
    const auto& bv = b.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    bool track = tracks(a) || tracks(b);
    Tensor y = make_op_output(a.shape(), std::move(out), track);
    if (track) {
        State as = a.state(), bs = b.state(), ys = y.state();
        Graph::active()->add_step([as, bs, ys] {
            accumulate(as, ys->grad);
            accumulate(bs, ys->grad);
        });
    }
    return y;
}

Tensor add(const Tensor& a, double b) {
    const auto& av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + b;
    bool track = tracks(a);
    Tensor y = make_op_output(a.shape(), std::move(out), track);
    if (track) {
        State as = a.state(), ys = y.state();
        Graph::active()->add_step([as, ys] { accumulate(as, ys->grad); });
    }
    return y;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    const auto& av = a.data();
    const auto& bv = b.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    bool track = tracks(a) || tracks(b);
    Tensor y = make_op_output(a.shape(), std::move(out), track);
    if (track) {
        State as = a.state(), bs = b.state(), ys = y.state();
        // sub(x, x) is identically zero; its gradient is exactly zero rather
        // than a pair of cancelling accumulations.
        if (as == bs) return y;
        Graph::active()->add_step([as, bs, ys] {
            accumulate(as, ys->grad);
            if (bs->requires_grad) {
                bs->ensure_grad();
                double* g = bs->grad.data();
                const double* u = ys->grad.data();
                for (std::size_t i = 0; i < ys->grad.size(); ++i) g[i] -= u[i];
                bs->grad_fresh = true;
            }
        });
    }
    return y;
}

Tensor sub(const Tensor& a, double b) { return add(a, -b); }

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    const auto& av = a.data();
    const auto& bv = b.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    bool track = tracks(a) || tracks(b);
    Tensor y = make_op_output(a.shape(), std::move(out), track);
    if (track) {
        State as = a.state(), bs = b.state(), ys = y.state();
        Graph::active()->add_step([as, bs, ys] {
            const double* u = ys->grad.data();
            const std::size_t n = ys->grad.size();
            if (as->requires_grad) {
                as->ensure_grad();
                double* g = as->grad.data();
                const double* bv2 = bs->value.data();
                for (std::size_t i = 0; i < n; ++i) g[i] += u[i] * bv2[i];
                as->grad_fresh = true;
            }
            if (bs->requires_grad) {
                bs->ensure_grad();
                double* g = bs->grad.data();
                const double* av2 = as->value.data();
                for (std::size_t i = 0; i < n; ++i) g[i] += u[i] * av2[i];
                bs->grad_fresh = true;
            }
        });
    }
    return y;
}

Tensor scale(const Tensor& a, double s) {
    const auto& av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * s;
    bool track = tracks(a);
    Tensor y = make_op_output(a.shape(), std::move(out), track);
    if (track) {
        State as = a.state(), ys = y.state();
        Graph::active()->add_step([as, ys, s] {
            as->ensure_grad();
            double* g = as->grad.data();
            const double* u = ys->grad.data();
            for (std::size_t i = 0; i < ys->grad.size(); ++i) g[i] += u[i] * s;
            as->grad_fresh = true;
        });
    }
    return y;
}

Tensor exp(const Tensor& a) {
    const auto& av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(av[i]);
    bool track = tracks(a);
    Tensor y = make_op_output(a.shape(), std::move(out), track);
    if (track) {
        State as = a.state(), ys = y.state();
        Graph::active()->add_step([as, ys] {
            as->ensure_grad();
            double* g = as->grad.data();
            const double* u = ys->grad.data();
            const double* yv = ys->value.data();
            for (std::size_t i = 0; i < ys->grad.size(); ++i) g[i] += u[i] * yv[i];
            as->grad_fresh = true;
        });
    }
    return y;
}

Tensor log(const Tensor& a) {
    const auto& av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(av[i] > 0.0))
            throw std::invalid_argument("log: input must be strictly positive (clamp first), got " +
                                        std::to_string(av[i]));
        out[i] = std::log(av[i]);
    }
    bool track = tracks(a);
    Tensor y = make_op_output(a.shape(), std::move(out), track);
    if (track) {
        State as = a.state(), ys = y.state();
        Graph::active()->add_step([as, ys] {
            as->ensure_grad();
            double* g = as->grad.data();
            const double* u = ys->grad.data();
            const double* xv = as->value.data();
            for (std::size_t i = 0; i < ys->grad.size(); ++i) g[i] += u[i] / xv[i];
            as->grad_fresh = true;
        });
    }
    return y;
}

Tensor relu(const Tensor& a) {
    const auto& av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
    bool track = tracks(a);
    Tensor y = make_op_output(a.shape(), std::move(out), track);
    if (track) {
        State as = a.state(), ys = y.state();
        Graph::active()->add_step([as, ys] {
            as->ensure_grad();
            double* g = as->grad.data();
            const double* u = ys->grad.data();
            const double* xv = as->value.data();
            for (std::size_t i = 0; i < ys->grad.size(); ++i)
                if (xv[i] > 0.0) g[i] += u[i];
            as->grad_fresh = true;
        });
    }
    return y;
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    if (!(lo <= hi)) throw std::invalid_argument("clamp: lo must be <= hi");
    const auto& av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(std::max(av[i], lo), hi);
    bool track = tracks(a);
    Tensor y = make_op_output(a.shape(), std::move(out), track);
    if (track) {
        State as = a.state(), ys = y.state();
        Graph::active()->add_step([as, ys, lo, hi] {
            as->ensure_grad();
            double* g = as->grad.data();
            const double* u = ys->grad.data();
            const double* xv = as->value.data();
            for (std::size_t i = 0; i < ys->grad.size(); ++i)
                if (xv[i] >= lo && xv[i] <= hi) g[i] += u[i];
            as->grad_fresh = true;
        });
    }
    return y;
}

// ---------------------------------------------------------------------------
// conv2d

Tensor conv2d(const Tensor& x, const Tensor& k, const Tensor& bias) {
    if (x.shape().size() != 3) throw std::invalid_argument("conv2d: input must be [H,W,Cin], got " + shape_str(x.shape()));
    if (k.shape().size() != 4) throw std::invalid_argument("conv2d: kernel must be [kh,kw,Cin,Cout], got " + shape_str(k.shape()));
    const int H = x.shape()[0], W = x.shape()[1], Cin = x.shape()[2];
    const int kh = k.shape()[0], kw = k.shape()[1], kci = k.shape()[2], Cout = k.shape()[3];
    if (kh % 2 == 0 || kw % 2 == 0) throw std::invalid_argument("conv2d: kernel extents must be odd");
    if (kci != Cin)
        throw std::invalid_argument("conv2d: channel mismatch, input has " + std::to_string(Cin) +
                                    " channels but kernel expects " + std::to_string(kci));
    if (bias.shape() != Shape{Cout})
        throw std::invalid_argument("conv2d: bias must be [Cout] = [" + std::to_string(Cout) + "], got " +
                                    shape_str(bias.shape()));
    const int ph = kh / 2, pw = kw / 2;

    std::vector<double> out(static_cast<std::size_t>(H) * W * Cout);
    {
        const double* xv = x.data().data();
        const double* kv = k.data().data();
        const double* bv = bias.data().data();
        for (int oy = 0; oy < H; ++oy) {
            for (int ox = 0; ox < W; ++ox) {
                double* op = &out[(static_cast<std::size_t>(oy) * W + ox) * Cout];
                for (int co = 0; co < Cout; ++co) op[co] = bv[co];
                for (int ky = 0; ky < kh; ++ky) {
                    const int iy = oy + ky - ph;
                    if (iy < 0 || iy >= H) continue;
                    for (int kx = 0; kx < kw; ++kx) {
                        const int ix = ox + kx - pw;
                        if (ix < 0 || ix >= W) continue;
                        const double* xp = &xv[(static_cast<std::size_t>(iy) * W + ix) * Cin];
                        const double* kp = &kv[((static_cast<std::size_t>(ky) * kw + kx) * Cin) * Cout];
                        for (int ci = 0; ci < Cin; ++ci) {
                            const double xval = xp[ci];
                            const double* kr = kp + static_cast<std::size_t>(ci) * Cout;
                            for (int co = 0; co < Cout; ++co) op[co] += xval * kr[co];
                        }
                    }
                }
            }
        }
    }

    bool track = tracks(x) || tracks(k) || tracks(bias);
    Tensor y = make_op_output({H, W, Cout}, std::move(out), track);
    if (track) {
        State xs = x.state(), ks = k.state(), bs = bias.state(), ys = y.state();
        Graph::active()->add_step([xs, ks, bs, ys, H, W, Cin, kh, kw, Cout, ph, pw] {
            const double* u = ys->grad.data();
            const double* xv = xs->value.data();
            const double* kv = ks->value.data();
            if (bs->requires_grad) {
                bs->ensure_grad();
                double* gb = bs->grad.data();
                for (std::size_t px = 0; px < static_cast<std::size_t>(H) * W; ++px) {
                    const double* up = &u[px * Cout];
                    for (int co = 0; co < Cout; ++co) gb[co] += up[co];
                }
                bs->grad_fresh = true;
            }
            const bool wants_x = xs->requires_grad;
            const bool wants_k = ks->requires_grad;
            if (wants_x) xs->ensure_grad();
            if (wants_k) ks->ensure_grad();
            double* gx = wants_x ? xs->grad.data() : nullptr;
            double* gk = wants_k ? ks->grad.data() : nullptr;
            for (int oy = 0; oy < H; ++oy) {
                for (int ox = 0; ox < W; ++ox) {
                    const double* up = &u[(static_cast<std::size_t>(oy) * W + ox) * Cout];
                    for (int ky = 0; ky < kh; ++ky) {
                        const int iy = oy + ky - ph;
                        if (iy < 0 || iy >= H) continue;
                        for (int kx = 0; kx < kw; ++kx) {
                            const int ix = ox + kx - pw;
                            if (ix < 0 || ix >= W) continue;
                            const std::size_t xoff = (static_cast<std::size_t>(iy) * W + ix) * Cin;
                            const std::size_t koff = (static_cast<std::size_t>(ky) * kw + kx) * Cin * Cout;
                            if (wants_x) {
                                for (int ci = 0; ci < Cin; ++ci) {
                                    const double* kr = &kv[koff + static_cast<std::size_t>(ci) * Cout];
                                    double acc = 0.0;
                                    for (int co = 0; co < Cout; ++co) acc += kr[co] * up[co];
                                    gx[xoff + ci] += acc;
                                }
                            }
                            if (wants_k) {
                                for (int ci = 0; ci < Cin; ++ci) {
                                    const double xval = xv[xoff + ci];
                                    double* gr = &gk[koff + static_cast<std::size_t>(ci) * Cout];
                                    for (int co = 0; co < Cout; ++co) gr[co] += xval * up[co];
                                }
                            }
                        }
                    }
                }
            }
            if (wants_x) xs->grad_fresh = true;
            if (wants_k) ks->grad_fresh = true;
        });
    }
    return y;
}

// ---------------------------------------------------------------------------
// log_softmax

Tensor log_softmax(const Tensor& x) {
    if (x.shape().empty()) throw std::invalid_argument("log_softmax: needs at least one axis");
    const int C = x.shape().back();
    if (C < 2) throw std::invalid_argument("log_softmax: class axis must have extent >= 2");
    const auto& xv = x.data();
    const std::size_t rows = xv.size() / static_cast<std::size_t>(C);
    std::vector<double> out(xv.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = &xv[r * C];
        double* yr = &out[r * C];
        double m = xr[0];
        for (int c = 1; c < C; ++c) m = std::max(m, xr[c]);
        double s = 0.0;
        for (int c = 0; c < C; ++c) s += std::exp(xr[c] - m);
        const double lse = m + std::log(s);
        for (int c = 0; c < C; ++c) yr[c] = xr[c] - lse;
    }
    bool track = tracks(x);
    Tensor y = make_op_output(x.shape(), std::move(out), track);
    if (track) {
        State xs = x.state(), ys = y.state();
        Graph::active()->add_step([xs, ys, C, rows] {
            xs->ensure_grad();
            double* g = xs->grad.data();
            const double* u = ys->grad.data();
            const double* yv = ys->value.data();
            for (std::size_t r = 0; r < rows; ++r) {
                const double* ur = &u[r * C];
                const double* yr = &yv[r * C];
                double usum = 0.0;
                for (int c = 0; c < C; ++c) usum += ur[c];
                double* gr = &g[r * C];
                for (int c = 0; c < C; ++c) gr[c] += ur[c] - std::exp(yr[c]) * usum;
            }
            xs->grad_fresh = true;
        });
    }
    return y;
}

// ---------------------------------------------------------------------------
// dropout

Tensor dropout(const Tensor& x, double rate, Mode mode, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0)
        throw std::invalid_argument("dropout: rate must be in [0,1), got " + std::to_string(rate));
    if (mode == Mode::eval) return x;
    const double keep_scale = 1.0 / (1.0 - rate);
    const auto& xv = x.data();
    auto mask = std::make_shared<std::vector<double>>(xv.size());
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const double m = rng.uniform() < rate ? 0.0 : keep_scale;
        (*mask)[i] = m;
        out[i] = xv[i] * m;
    }
    bool track = tracks(x);
    Tensor y = make_op_output(x.shape(), std::move(out), track);
    if (track) {
        State xs = x.state(), ys = y.state();
        Graph::active()->add_step([xs, ys, mask] {
            xs->ensure_grad();
            double* g = xs->grad.data();
            const double* u = ys->grad.data();
            const double* m = mask->data();
            for (std::size_t i = 0; i < ys->grad.size(); ++i) g[i] += u[i] * m[i];
            xs->grad_fresh = true;
        });
    }
    return y;
}

// ---------------------------------------------------------------------------
// reductions

Tensor sum(const Tensor& x) {
    const auto& xv = x.data();
    double s = 0.0;
    for (double v : xv) s += v;
    bool track = tracks(x);
    Tensor y = make_op_output({1}, {s}, track);
    if (track) {
        State xs = x.state(), ys = y.state();
        Graph::active()->add_step([xs, ys] {
            xs->ensure_grad();
            double* g = xs->grad.data();
            const double u = ys->grad[0];
            for (std::size_t i = 0; i < xs->grad.size(); ++i) g[i] += u;
            xs->grad_fresh = true;
        });
    }
    return y;
}

Tensor sum_last_axis(const Tensor& x) {
    if (x.shape().size() < 2)
        throw std::invalid_argument("sum_last_axis: needs rank >= 2, got " + shape_str(x.shape()));
    const int C = x.shape().back();
    Shape out_shape(x.shape().begin(), x.shape().end() - 1);
    const auto& xv = x.data();
    const std::size_t rows = xv.size() / static_cast<std::size_t>(C);
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        const double* xr = &xv[r * C];
        for (int c = 0; c < C; ++c) s += xr[c];
        out[r] = s;
    }
    bool track = tracks(x);
    Tensor y = make_op_output(std::move(out_shape), std::move(out), track);
    if (track) {
        State xs = x.state(), ys = y.state();
        Graph::active()->add_step([xs, ys, C, rows] {
            xs->ensure_grad();
            double* g = xs->grad.data();
            const double* u = ys->grad.data();
            for (std::size_t r = 0; r < rows; ++r) {
                const double ur = u[r];
                double* gr = &g[r * C];
                for (int c = 0; c < C; ++c) gr[c] += ur;
            }
            xs->grad_fresh = true;
        });
    }
    return y;
}

Tensor detach(const Tensor& x) {
    return Tensor::from_data(x.shape(), x.data(), false);
}

// ---------------------------------------------------------------------------
// SGD

SgdOptimizer::SgdOptimizer(std::vector<Tensor> params, double momentum)
    : params_(std::move(params)), momentum_(momentum) {
    if (momentum_ < 0.0 || momentum_ >= 1.0)
        throw std::invalid_argument("sgd: momentum must be in [0,1), got " + std::to_string(momentum_));
    for (const auto& p : params_) {
        if (!p.defined() || !p.requires_grad())
            throw std::invalid_argument("sgd: every parameter must require gradients");
        velocity_.emplace_back(p.data().size(), 0.0);
    }
}

void SgdOptimizer::step(double lr) {
    if (!(lr > 0.0)) throw std::invalid_argument("sgd: learning rate must be positive");
    bool any_fresh = false;
    for (const auto& p : params_)
        if (p.state()->grad_fresh) any_fresh = true;
    if (!any_fresh)
        throw std::runtime_error("sgd: no gradients populated; run backward before stepping");
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto st = params_[i].state();
        st->ensure_grad();
        double* v = velocity_[i].data();
        double* w = st->value.data();
        double* g = st->grad.data();
        const std::size_t n = st->value.size();
        if (momentum_ == 0.0) {
            for (std::size_t j = 0; j < n; ++j) w[j] -= lr * g[j];
        } else {
            for (std::size_t j = 0; j < n; ++j) {
                v[j] = momentum_ * v[j] + g[j];
                w[j] -= lr * v[j];
            }
        }
        std::fill(st->grad.begin(), st->grad.end(), 0.0);
        st->grad_fresh = false;
    }
}

} // namespace rectseg
