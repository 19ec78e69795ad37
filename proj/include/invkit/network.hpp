// Sequential networks over the autodiff primitives, SGD/Adam optimizers and
// the flat binary checkpoint format with its text manifest.
#ifndef INVKIT_NETWORK_HPP
#define INVKIT_NETWORK_HPP

#include <cstring>
#include <map>
#include <sstream>

#include "invkit/neuralkit.hpp"

namespace invkit::nn {

enum class LayerKind { dense, conv2d, relu, leaky_relu, upsample_nearest, channel_norm, residual_add };

struct Layer {
    LayerKind kind;
    Tensor weight, bias;   // dense, conv2d
    Tensor gamma, beta;    // channel_norm
    std::size_t in_dim = 0, out_dim = 0;            // dense
    std::size_t in_ch = 0, out_ch = 0, ksize = 0;   // conv2d
    std::size_t channels = 0;                       // channel_norm
    std::size_t factor = 2;                         // upsample_nearest
    double alpha = 0.01;                            // leaky_relu
};

// Ordered layer stack. residual_add adds the network input to the current
// activation (global skip connection), so denoiser nets predict residuals.
class Network {
  public:
    Network& add_dense(std::size_t in, std::size_t out, Rng& rng) {
        Layer l;
        l.kind = LayerKind::dense;
        l.in_dim = in;
        l.out_dim = out;
        double bound = in > 0 ? 1.0 / std::sqrt(static_cast<double>(in)) : 0.0;
        l.weight = Tensor::variable({out, in}, uniform_init(out * in, bound, rng));
        l.bias = Tensor::variable({out}, uniform_init(out, bound, rng));
        layers_.push_back(std::move(l));
        return *this;
    }

    Network& add_conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t k, Rng& rng) {
        Layer l;
        l.kind = LayerKind::conv2d;
        l.in_ch = in_ch;
        l.out_ch = out_ch;
        l.ksize = k;
        double bound = 1.0 / std::sqrt(static_cast<double>(in_ch * k * k));
        l.weight = Tensor::variable({out_ch, in_ch, k, k}, uniform_init(out_ch * in_ch * k * k, bound, rng));
        l.bias = Tensor::variable({out_ch}, uniform_init(out_ch, bound, rng));
        layers_.push_back(std::move(l));
        return *this;
    }

    Network& add_relu() {
        Layer l;
        l.kind = LayerKind::relu;
        layers_.push_back(std::move(l));
        return *this;
    }

    Network& add_leaky_relu(double alpha) {
        Layer l;
        l.kind = LayerKind::leaky_relu;
        l.alpha = alpha;
        layers_.push_back(std::move(l));
        return *this;
    }

    Network& add_upsample_nearest(std::size_t factor) {
        Layer l;
        l.kind = LayerKind::upsample_nearest;
        l.factor = factor;
        layers_.push_back(std::move(l));
        return *this;
    }

    Network& add_channel_norm(std::size_t channels) {
        Layer l;
        l.kind = LayerKind::channel_norm;
        l.channels = channels;
        l.gamma = Tensor::variable({channels}, std::vector<double>(channels, 1.0));
        l.beta = Tensor::variable({channels}, std::vector<double>(channels, 0.0));
        layers_.push_back(std::move(l));
        return *this;
    }

    Network& add_residual_add() {
        Layer l;
        l.kind = LayerKind::residual_add;
        layers_.push_back(std::move(l));
        return *this;
    }

    Tensor forward(const Tensor& input) const {
        Tensor x = input;
        for (const Layer& l : layers_) {
            switch (l.kind) {
                case LayerKind::dense: x = dense(l.weight, l.bias, x); break;
                case LayerKind::conv2d: x = conv2d(l.weight, l.bias, x); break;
                case LayerKind::relu: x = relu(x); break;
                case LayerKind::leaky_relu: x = leaky_relu(x, l.alpha); break;
                case LayerKind::upsample_nearest: x = upsample_nearest(x, l.factor); break;
                case LayerKind::channel_norm: x = channel_norm(l.gamma, l.beta, x); break;
                case LayerKind::residual_add:
                    if (x.shape() != input.shape()) throw ValidationError("residual_add: shape mismatch with input");
                    x = add(x, input);
                    break;
            }
        }
        return x;
    }

    std::vector<Tensor> parameters() const {
        std::vector<Tensor> ps;
        for (const Layer& l : layers_) {
            if (l.weight.defined()) ps.push_back(l.weight);
            if (l.bias.defined()) ps.push_back(l.bias);
            if (l.gamma.defined()) ps.push_back(l.gamma);
            if (l.beta.defined()) ps.push_back(l.beta);
        }
        return ps;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const Tensor& p : parameters()) n += p.size();
        return n;
    }

    const std::vector<Layer>& layers() const { return layers_; }
    bool empty() const { return layers_.empty(); }

    std::vector<double> flat_parameters() const {
        std::vector<double> out;
        for (const Tensor& p : parameters()) out.insert(out.end(), p.value().begin(), p.value().end());
        return out;
    }

    void set_flat_parameters(const std::vector<double>& flat) {
        std::size_t off = 0;
        for (Tensor p : parameters()) {
            if (off + p.size() > flat.size()) throw ValidationError("set_flat_parameters: too few values");
            std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), p.size(), p.mutable_value().begin());
            off += p.size();
        }
        if (off != flat.size()) throw ValidationError("set_flat_parameters: size mismatch");
    }

    // One line per layer; enough to rebuild the architecture.
    std::string manifest() const {
        std::ostringstream os;
        for (const Layer& l : layers_) {
            switch (l.kind) {
                case LayerKind::dense: os << "dense " << l.in_dim << " " << l.out_dim << "\n"; break;
                case LayerKind::conv2d: os << "conv2d " << l.in_ch << " " << l.out_ch << " " << l.ksize << "\n"; break;
                case LayerKind::relu: os << "relu\n"; break;
                case LayerKind::leaky_relu: os << "leaky_relu " << l.alpha << "\n"; break;
                case LayerKind::upsample_nearest: os << "upsample_nearest " << l.factor << "\n"; break;
                case LayerKind::channel_norm: os << "channel_norm " << l.channels << "\n"; break;
                case LayerKind::residual_add: os << "residual_add\n"; break;
            }
        }
        return os.str();
    }

    static Network from_manifest(const std::string& text) {
        Network net;
        Rng rng(0);  // values are overwritten by the checkpoint payload
        std::istringstream is(text);
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::string kind;
            ls >> kind;
            if (kind == "dense") {
                std::size_t in, out;
                ls >> in >> out;
                net.add_dense(in, out, rng);
            } else if (kind == "conv2d") {
                std::size_t ci, co, k;
                ls >> ci >> co >> k;
                net.add_conv2d(ci, co, k, rng);
            } else if (kind == "relu") {
                net.add_relu();
            } else if (kind == "leaky_relu") {
                double a;
                ls >> a;
                net.add_leaky_relu(a);
            } else if (kind == "upsample_nearest") {
                std::size_t f;
                ls >> f;
                net.add_upsample_nearest(f);
            } else if (kind == "channel_norm") {
                std::size_t c;
                ls >> c;
                net.add_channel_norm(c);
            } else if (kind == "residual_add") {
                net.add_residual_add();
            } else {
                throw ValidationError("manifest: unknown layer kind '" + kind + "'");
            }
        }
        return net;
    }

  private:
    static std::vector<double> uniform_init(std::size_t n, double bound, Rng& rng) {
        std::vector<double> v(n);
        for (double& e : v) e = rng.uniform(-bound, bound);
        return v;
    }

    std::vector<Layer> layers_;
};

// SGD or Adam with standard bias-corrected moments; per-parameter state.
class Optimizer {
  public:
    static Optimizer sgd(double lr) {
        Optimizer o;
        o.kind_ = Kind::sgd;
        o.lr_ = lr;
        return o;
    }
    static Optimizer adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
        Optimizer o;
        o.kind_ = Kind::adam;
        o.lr_ = lr;
        o.beta1_ = beta1;
        o.beta2_ = beta2;
        o.eps_ = eps;
        return o;
    }

    void step(const std::vector<Tensor>& params) {
        for (const Tensor& p : params) {
            auto node = p.node();
            if (node->grad.size() != node->value.size())
                throw ValidationError("optimizer: parameter has no populated gradient");
            if (kind_ == Kind::sgd) {
                for (std::size_t i = 0; i < node->value.size(); ++i) node->value[i] -= lr_ * node->grad[i];
            } else {
                State& st = state_[node.get()];
                if (st.m.empty()) {
                    st.m.assign(node->value.size(), 0.0);
                    st.v.assign(node->value.size(), 0.0);
                }
                st.t += 1;
                double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(st.t));
                double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(st.t));
                for (std::size_t i = 0; i < node->value.size(); ++i) {
                    double g = node->grad[i];
                    st.m[i] = beta1_ * st.m[i] + (1.0 - beta1_) * g;
                    st.v[i] = beta2_ * st.v[i] + (1.0 - beta2_) * g * g;
                    double mhat = st.m[i] / bc1;
                    double vhat = st.v[i] / bc2;
                    node->value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
                }
            }
            if (!all_finite(node->value)) throw NumericError("optimizer: parameters became non-finite");
        }
    }

    static void zero_grad(const std::vector<Tensor>& params) {
        for (const Tensor& p : params) p.node()->grad.assign(p.size(), 0.0);
    }

    double learning_rate() const { return lr_; }

  private:
    enum class Kind { sgd, adam };
    struct State {
        std::vector<double> m, v;
        std::size_t t = 0;
    };
    Kind kind_ = Kind::sgd;
    double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    std::map<const detail::Node*, State> state_;
};

// Image-to-image CNN denoiser with a global residual connection.
// depth = number of conv layers, >= 2.
inline Network build_denoiser(std::size_t channels, std::size_t depth, std::uint64_t seed) {
    if (channels == 0 || depth < 2) throw ValidationError("build_denoiser: need channels >= 1 and depth >= 2");
    Rng rng = Rng(seed).fork(0xd37);
    Network net;
    net.add_conv2d(1, channels, 3, rng).add_relu();
    for (std::size_t d = 0; d + 2 < depth; ++d) net.add_conv2d(channels, channels, 3, rng).add_relu();
    net.add_conv2d(channels, 1, 3, rng);
    net.add_residual_add();
    return net;
}

// Underparameterized upsampling decoder: `stages` blocks of
// upsample_nearest(2) + 1x1 conv + relu + channel_norm, then a 1x1 conv to
// one channel. Input shape {k, h0, w0} maps to {1, h0*2^stages, w0*2^stages}.
inline Network build_decoder(std::size_t k, std::size_t stages, std::uint64_t seed) {
    if (k == 0 || stages == 0) throw ValidationError("build_decoder: need k >= 1 and stages >= 1");
    Rng rng = Rng(seed).fork(0xdec);
    Network net;
    for (std::size_t s = 0; s < stages; ++s) {
        net.add_upsample_nearest(2);
        net.add_conv2d(k, k, 1, rng);
        net.add_relu();
        net.add_channel_norm(k);
    }
    net.add_conv2d(k, 1, 1, rng);
    return net;
}

// ---- checkpoint I/O: magic "IVKW", version u32, count u64, f64 payload ----

inline void save_checkpoint(const Network& net, const std::string& weights_path, const std::string& manifest_path) {
    std::ofstream f(weights_path, std::ios::binary);
    if (!f) throw IoError("save_checkpoint: cannot open " + weights_path);
    f.write("IVKW", 4);
    std::uint32_t version = 1;
    f.write(reinterpret_cast<const char*>(&version), 4);
    std::vector<double> flat = net.flat_parameters();
    std::uint64_t count = flat.size();
    f.write(reinterpret_cast<const char*>(&count), 8);
    f.write(reinterpret_cast<const char*>(flat.data()), static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!f) throw IoError("save_checkpoint: write failed for " + weights_path);

    std::ofstream m(manifest_path);
    if (!m) throw IoError("save_checkpoint: cannot open " + manifest_path);
    m << net.manifest();
    if (!m) throw IoError("save_checkpoint: write failed for " + manifest_path);
}

inline Network load_checkpoint(const std::string& weights_path, const std::string& manifest_path) {
    std::ifstream m(manifest_path);
    if (!m) throw IoError("load_checkpoint: cannot open " + manifest_path);
    std::stringstream ss;
    ss << m.rdbuf();
    Network net = Network::from_manifest(ss.str());

    std::ifstream f(weights_path, std::ios::binary);
    if (!f) throw IoError("load_checkpoint: cannot open " + weights_path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "IVKW", 4) != 0) throw IoError("load_checkpoint: bad magic in " + weights_path);
    std::uint32_t version = 0;
    f.read(reinterpret_cast<char*>(&version), 4);
    if (version != 1) throw IoError("load_checkpoint: unsupported version");
    std::uint64_t count = 0;
    f.read(reinterpret_cast<char*>(&count), 8);
    if (count != net.parameter_count()) throw IoError("load_checkpoint: parameter count does not match manifest");
    std::vector<double> flat(count);
    f.read(reinterpret_cast<char*>(flat.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (!f) throw IoError("load_checkpoint: truncated weight payload");
    net.set_flat_parameters(flat);
    return net;
}

}  // namespace invkit::nn

#endif  // INVKIT_NETWORK_HPP
