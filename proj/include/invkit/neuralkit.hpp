// Minimal reverse-mode automatic differentiation with the small dense and
// convolutional layers, optimizers and network builders used by the learned
// reconstruction methods. Dynamic tape, 64-bit floats, no global state.
#ifndef INVKIT_NEURALKIT_HPP
#define INVKIT_NEURALKIT_HPP

#include <fstream>
#include <functional>
#include <memory>
#include <unordered_set>

#include "invkit/operators.hpp"

namespace invkit::nn {

namespace detail {

struct Node {
    std::vector<std::size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;  // sized lazily on first backward touch
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;  // scatters this->grad into parents

    std::size_t size() const { return value.size(); }
    void ensure_grad() {
        if (grad.empty()) grad.assign(value.size(), 0.0);
    }
};

inline std::size_t shape_product(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

}  // namespace detail

// Handle to a value node in the recorded graph.
class Tensor {
  public:
    Tensor() = default;

    static Tensor variable(std::vector<std::size_t> shape, std::vector<double> data) {
        return make(std::move(shape), std::move(data), true);
    }
    static Tensor constant(std::vector<std::size_t> shape, std::vector<double> data) {
        return make(std::move(shape), std::move(data), false);
    }

    bool defined() const { return node_ != nullptr; }
    const std::vector<std::size_t>& shape() const { return node_->shape; }
    std::size_t size() const { return node_->value.size(); }
    const std::vector<double>& value() const { return node_->value; }
    std::vector<double>& mutable_value() const { return node_->value; }
    const std::vector<double>& grad() const { return node_->grad; }
    bool requires_grad() const { return node_->requires_grad; }
    void zero_grad() const { node_->grad.assign(node_->value.size(), 0.0); }

    std::shared_ptr<detail::Node> node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

  private:
    static Tensor make(std::vector<std::size_t> shape, std::vector<double> data, bool requires_grad) {
        if (detail::shape_product(shape) != data.size())
            throw ValidationError("tensor: data length does not match shape");
        if (!all_finite(data)) throw ValidationError("tensor: non-finite values");
        auto n = std::make_shared<detail::Node>();
        n->shape = std::move(shape);
        n->value = std::move(data);
        n->requires_grad = requires_grad;
        return Tensor(n);
    }

    std::shared_ptr<detail::Node> node_;
};

namespace detail {

inline Tensor make_op(std::vector<std::size_t> shape, std::vector<double> value, std::vector<std::shared_ptr<Node>> parents,
                      std::function<void(Node&)> backward) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    bool rg = false;
    for (const auto& p : parents) rg = rg || p->requires_grad;
    n->requires_grad = rg;
    if (rg) {
        n->parents = std::move(parents);
        n->backward_fn = std::move(backward);
    }
    return Tensor(n);
}

}  // namespace detail

// Populates grad fields with vector-Jacobian products by visiting the
// recorded graph in reverse topological order exactly once. Repeated calls
// without zeroing accumulate.
inline void backward(const Tensor& output, const std::vector<double>& upstream) {
    auto root = output.node();
    if (!root) throw ValidationError("backward: undefined tensor");
    if (!root->requires_grad) throw ValidationError("backward: tensor has no recorded graph");
    if (upstream.size() != root->value.size()) throw ValidationError("backward: upstream shape mismatch");

    // iterative DFS topological sort
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> seen;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            detail::Node* p = node->parents[idx++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    // Interior node grads are scratch per pass; only leaf grads accumulate
    // across repeated backward calls.
    for (detail::Node* n : order)
        if (n->backward_fn) n->grad.assign(n->value.size(), 0.0);
    root->ensure_grad();
    for (std::size_t i = 0; i < upstream.size(); ++i) root->grad[i] += upstream[i];
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        if (n->backward_fn) n->backward_fn(*n);
    }
}

inline void backward_scalar(const Tensor& output) { backward(output, std::vector<double>(output.size(), 1.0)); }

// ---- primitive operations ----

inline Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ValidationError("add: shape mismatch");
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] + b.value()[i];
    auto an = a.node(), bn = b.node();
    return detail::make_op(a.shape(), std::move(v), {an, bn}, [an, bn](detail::Node& n) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] += n.grad[i];
        }
    });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ValidationError("sub: shape mismatch");
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] - b.value()[i];
    auto an = a.node(), bn = b.node();
    return detail::make_op(a.shape(), std::move(v), {an, bn}, [an, bn](detail::Node& n) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] -= n.grad[i];
        }
    });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ValidationError("mul: shape mismatch");
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] * b.value()[i];
    auto an = a.node(), bn = b.node();
    return detail::make_op(a.shape(), std::move(v), {an, bn}, [an, bn](detail::Node& n) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i] * bn->value[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] += n.grad[i] * an->value[i];
        }
    });
}

inline Tensor scale(const Tensor& a, double s) {
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = s * a.value()[i];
    auto an = a.node();
    return detail::make_op(a.shape(), std::move(v), {an}, [an, s](detail::Node& n) {
        an->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += s * n.grad[i];
    });
}

// product with a scalar-shaped tensor ({1}); used for learnable step sizes
inline Tensor scale_by(const Tensor& a, const Tensor& s) {
    if (s.size() != 1) throw ValidationError("scale_by: scalar tensor must have size 1");
    double sv = s.value()[0];
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = sv * a.value()[i];
    auto an = a.node(), sn = s.node();
    return detail::make_op(a.shape(), std::move(v), {an, sn}, [an, sn](detail::Node& n) {
        double sval = sn->value[0];
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += sval * n.grad[i];
        }
        if (sn->requires_grad) {
            sn->ensure_grad();
            double acc = 0.0;
            for (std::size_t i = 0; i < n.grad.size(); ++i) acc += n.grad[i] * an->value[i];
            sn->grad[0] += acc;
        }
    });
}

inline Tensor relu(const Tensor& a) {
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] > 0.0 ? a.value()[i] : 0.0;
    auto an = a.node();
    return detail::make_op(a.shape(), std::move(v), {an}, [an](detail::Node& n) {
        an->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            if (an->value[i] > 0.0) an->grad[i] += n.grad[i];
    });
}

inline Tensor leaky_relu(const Tensor& a, double alpha) {
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] > 0.0 ? a.value()[i] : alpha * a.value()[i];
    auto an = a.node();
    return detail::make_op(a.shape(), std::move(v), {an}, [an, alpha](detail::Node& n) {
        an->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += (an->value[i] > 0.0 ? 1.0 : alpha) * n.grad[i];
    });
}

inline Tensor softplus(const Tensor& a) {
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double x = a.value()[i];
        v[i] = x > 30.0 ? x : std::log1p(std::exp(x));
    }
    auto an = a.node();
    return detail::make_op(a.shape(), std::move(v), {an}, [an](detail::Node& n) {
        an->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            double x = an->value[i];
            double sig = x > 30.0 ? 1.0 : (x < -30.0 ? std::exp(x) : 1.0 / (1.0 + std::exp(-x)));
            an->grad[i] += sig * n.grad[i];
        }
    });
}

inline Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.value()) s += v;
    auto an = a.node();
    return detail::make_op({1}, {s}, {an}, [an](detail::Node& n) {
        an->ensure_grad();
        for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += n.grad[0];
    });
}

// y = W x + b with W {out,in}, b {out}; x may have any shape of total size in.
inline Tensor dense(const Tensor& w, const Tensor& b, const Tensor& x) {
    if (w.shape().size() != 2) throw ValidationError("dense: weight must be 2-D");
    std::size_t out = w.shape()[0], in = w.shape()[1];
    if (x.size() != in || b.size() != out) throw ValidationError("dense: shape mismatch");
    std::vector<double> v(out);
    for (std::size_t o = 0; o < out; ++o) {
        const double* row = &w.value()[o * in];
        double acc = b.value()[o];
        for (std::size_t i = 0; i < in; ++i) acc += row[i] * x.value()[i];
        v[o] = acc;
    }
    auto wn = w.node(), bn = b.node(), xn = x.node();
    return detail::make_op({out}, std::move(v), {wn, bn, xn}, [wn, bn, xn, out, in](detail::Node& n) {
        if (wn->requires_grad) {
            wn->ensure_grad();
            for (std::size_t o = 0; o < out; ++o) {
                double g = n.grad[o];
                if (g == 0.0) continue;
                double* row = &wn->grad[o * in];
                for (std::size_t i = 0; i < in; ++i) row[i] += g * xn->value[i];
            }
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t o = 0; o < out; ++o) bn->grad[o] += n.grad[o];
        }
        if (xn->requires_grad) {
            xn->ensure_grad();
            for (std::size_t o = 0; o < out; ++o) {
                double g = n.grad[o];
                if (g == 0.0) continue;
                const double* row = &wn->value[o * in];
                for (std::size_t i = 0; i < in; ++i) xn->grad[i] += g * row[i];
            }
        }
    });
}

// Zero-padded same-size 2D convolution: w {Cout,Cin,k,k}, x {Cin,H,W}.
inline Tensor conv2d(const Tensor& w, const Tensor& b, const Tensor& x) {
    if (w.shape().size() != 4 || x.shape().size() != 3) throw ValidationError("conv2d: bad ranks");
    std::size_t cout = w.shape()[0], cin = w.shape()[1], kh = w.shape()[2], kw = w.shape()[3];
    std::size_t xc = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
    if (xc != cin || b.size() != cout) throw ValidationError("conv2d: shape mismatch");
    std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(kh / 2), pw = static_cast<std::ptrdiff_t>(kw / 2);

    std::vector<double> v(cout * H * W);
    for (std::size_t co = 0; co < cout; ++co) {
        for (std::size_t r = 0; r < H; ++r)
            for (std::size_t c = 0; c < W; ++c) {
                double acc = b.value()[co];
                for (std::size_t ci = 0; ci < cin; ++ci) {
                    const double* kplane = &w.value()[((co * cin + ci) * kh) * kw];
                    const double* xplane = &x.value()[ci * H * W];
                    for (std::size_t i = 0; i < kh; ++i) {
                        std::ptrdiff_t rr = static_cast<std::ptrdiff_t>(r + i) - ph;
                        if (rr < 0 || rr >= static_cast<std::ptrdiff_t>(H)) continue;
                        for (std::size_t j = 0; j < kw; ++j) {
                            std::ptrdiff_t cc = static_cast<std::ptrdiff_t>(c + j) - pw;
                            if (cc < 0 || cc >= static_cast<std::ptrdiff_t>(W)) continue;
                            acc += kplane[i * kw + j] * xplane[rr * W + cc];
                        }
                    }
                }
                v[(co * H + r) * W + c] = acc;
            }
    }
    auto wn = w.node(), bn = b.node(), xn = x.node();
    return detail::make_op({cout, H, W}, std::move(v), {wn, bn, xn},
                           [wn, bn, xn, cout, cin, kh, kw, H, W, ph, pw](detail::Node& n) {
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t co = 0; co < cout; ++co) {
                double acc = 0.0;
                const double* gplane = &n.grad[co * H * W];
                for (std::size_t i = 0; i < H * W; ++i) acc += gplane[i];
                bn->grad[co] += acc;
            }
        }
        bool need_w = wn->requires_grad, need_x = xn->requires_grad;
        if (need_w) wn->ensure_grad();
        if (need_x) xn->ensure_grad();
        if (!need_w && !need_x) return;
        for (std::size_t co = 0; co < cout; ++co) {
            const double* gplane = &n.grad[co * H * W];
            for (std::size_t ci = 0; ci < cin; ++ci) {
                const double* xplane = &xn->value[ci * H * W];
                double* xgrad = need_x ? &xn->grad[ci * H * W] : nullptr;
                const double* kplane = &wn->value[((co * cin + ci) * kh) * kw];
                double* kgrad = need_w ? &wn->grad[((co * cin + ci) * kh) * kw] : nullptr;
                for (std::size_t i = 0; i < kh; ++i)
                    for (std::size_t j = 0; j < kw; ++j) {
                        double kv = kplane[i * kw + j];
                        double kacc = 0.0;
                        for (std::size_t r = 0; r < H; ++r) {
                            std::ptrdiff_t rr = static_cast<std::ptrdiff_t>(r + i) - ph;
                            if (rr < 0 || rr >= static_cast<std::ptrdiff_t>(H)) continue;
                            for (std::size_t c = 0; c < W; ++c) {
                                std::ptrdiff_t cc = static_cast<std::ptrdiff_t>(c + j) - pw;
                                if (cc < 0 || cc >= static_cast<std::ptrdiff_t>(W)) continue;
                                double g = gplane[r * W + c];
                                kacc += g * xplane[rr * W + cc];
                                if (need_x) xgrad[rr * W + cc] += g * kv;
                            }
                        }
                        if (need_w) kgrad[i * kw + j] += kacc;
                    }
            }
        }
    });
}

inline Tensor upsample_nearest(const Tensor& x, std::size_t factor) {
    if (x.shape().size() != 3 || factor == 0) throw ValidationError("upsample_nearest: bad input");
    std::size_t C = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
    std::size_t OH = H * factor, OW = W * factor;
    std::vector<double> v(C * OH * OW);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t r = 0; r < OH; ++r)
            for (std::size_t q = 0; q < OW; ++q) v[(c * OH + r) * OW + q] = x.value()[(c * H + r / factor) * W + q / factor];
    auto xn = x.node();
    return detail::make_op({C, OH, OW}, std::move(v), {xn}, [xn, C, H, W, OH, OW, factor](detail::Node& n) {
        xn->ensure_grad();
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t r = 0; r < OH; ++r)
                for (std::size_t q = 0; q < OW; ++q)
                    xn->grad[(c * H + r / factor) * W + q / factor] += n.grad[(c * OH + r) * OW + q];
    });
}

// Per-channel normalization to zero mean, unit variance over spatial dims,
// followed by a learnable affine map.
inline Tensor channel_norm(const Tensor& gamma, const Tensor& beta, const Tensor& x, double eps = 1e-5) {
    if (x.shape().size() != 3) throw ValidationError("channel_norm: input must be {C,H,W}");
    std::size_t C = x.shape()[0], S = x.shape()[1] * x.shape()[2];
    if (gamma.size() != C || beta.size() != C) throw ValidationError("channel_norm: affine shape mismatch");
    std::vector<double> v(x.size()), xhat(x.size()), inv_std(C);
    for (std::size_t c = 0; c < C; ++c) {
        const double* xp = &x.value()[c * S];
        double mu = 0.0;
        for (std::size_t i = 0; i < S; ++i) mu += xp[i];
        mu /= static_cast<double>(S);
        double var = 0.0;
        for (std::size_t i = 0; i < S; ++i) var += (xp[i] - mu) * (xp[i] - mu);
        var /= static_cast<double>(S);
        double is = 1.0 / std::sqrt(var + eps);
        inv_std[c] = is;
        for (std::size_t i = 0; i < S; ++i) {
            xhat[c * S + i] = (xp[i] - mu) * is;
            v[c * S + i] = gamma.value()[c] * xhat[c * S + i] + beta.value()[c];
        }
    }
    auto gn = gamma.node(), btn = beta.node(), xn = x.node();
    auto xhat_p = std::make_shared<std::vector<double>>(std::move(xhat));
    auto istd_p = std::make_shared<std::vector<double>>(std::move(inv_std));
    return detail::make_op(x.shape(), std::move(v), {gn, btn, xn}, [gn, btn, xn, xhat_p, istd_p, C, S](detail::Node& n) {
        for (std::size_t c = 0; c < C; ++c) {
            const double* g = &n.grad[c * S];
            const double* xh = &(*xhat_p)[c * S];
            if (gn->requires_grad) {
                gn->ensure_grad();
                double acc = 0.0;
                for (std::size_t i = 0; i < S; ++i) acc += g[i] * xh[i];
                gn->grad[c] += acc;
            }
            if (btn->requires_grad) {
                btn->ensure_grad();
                double acc = 0.0;
                for (std::size_t i = 0; i < S; ++i) acc += g[i];
                btn->grad[c] += acc;
            }
            if (xn->requires_grad) {
                xn->ensure_grad();
                double gm = 0.0, gx = 0.0;
                for (std::size_t i = 0; i < S; ++i) {
                    gm += g[i];
                    gx += g[i] * xh[i];
                }
                gm /= static_cast<double>(S);
                gx /= static_cast<double>(S);
                double scale = gn->value[c] * (*istd_p)[c];
                for (std::size_t i = 0; i < S; ++i) xn->grad[c * S + i] += scale * (g[i] - gm - xh[i] * gx);
            }
        }
    });
}

// Measurement-operator application inside the graph. The backward rule is the
// Jacobian-transpose product, which for linear operators is the adjoint.
inline Tensor apply_operator(const ForwardOperator& op, const Tensor& x) {
    if (x.size() != op.input_size()) throw ValidationError("apply_operator: input size mismatch");
    std::vector<double> y = op.apply_vec(x.value());
    std::vector<std::size_t> shape{y.size()};  // read size before the move
    auto xn = x.node();
    const ForwardOperator* opp = &op;  // operators outlive graphs; they are immutable
    return detail::make_op(std::move(shape), std::move(y), {xn}, [xn, opp](detail::Node& n) {
        xn->ensure_grad();
        std::vector<double> g = opp->jtvp_vec(xn->value, n.grad);
        for (std::size_t i = 0; i < g.size(); ++i) xn->grad[i] += g[i];
    });
}

// Adjoint application inside the graph (linear operators only); output is a
// single-channel image tensor {1,H,W}.
inline Tensor apply_adjoint(const ForwardOperator& op, const Tensor& u) {
    if (!op.is_linear()) throw ValidationError("apply_adjoint: operator must be linear");
    if (u.size() != op.output_size()) throw ValidationError("apply_adjoint: input size mismatch");
    std::vector<double> x = op.adjoint_vec(u.value());
    auto un = u.node();
    const ForwardOperator* opp = &op;
    return detail::make_op({1, op.input_height(), op.input_width()}, std::move(x), {un}, [un, opp](detail::Node& n) {
        un->ensure_grad();
        std::vector<double> g = opp->apply_vec(n.grad);
        for (std::size_t i = 0; i < g.size(); ++i) un->grad[i] += g[i];
    });
}

inline Tensor reshape(const Tensor& x, std::vector<std::size_t> new_shape) {
    if (detail::shape_product(new_shape) != x.size()) throw ValidationError("reshape: size mismatch");
    auto xn = x.node();
    return detail::make_op(std::move(new_shape), x.value(), {xn}, [xn](detail::Node& n) {
        xn->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) xn->grad[i] += n.grad[i];
    });
}

// mean((a-b)^2) as a scalar tensor
inline Tensor mse(const Tensor& a, const Tensor& b) {
    Tensor d = sub(a, b);
    return scale(sum(mul(d, d)), 1.0 / static_cast<double>(a.size()));
}

}  // namespace invkit::nn

#endif  // INVKIT_NEURALKIT_HPP
