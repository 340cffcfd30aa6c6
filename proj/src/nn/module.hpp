#pragma once

#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "core/ops.hpp"
#include "core/tensor.hpp"

namespace ral::nn {

template <typename S>
struct ParamT {
    std::string name;
    TensorT<S> tensor;
    bool decay;  // decoupled weight decay applies; false for biases and norm affine params
};

// Ordered registry of named trainable tensors. Registration order is the
// checkpoint order, so construction must be deterministic.
template <typename S>
class ParamStoreT {
public:
    TensorT<S> add(const std::string& name, Shape shape, bool decay) {
        if (!names_.insert(name).second)
            throw ContractError("parameter name registered twice: " + name);
        auto t = TensorT<S>::zeros(std::move(shape));
        t.set_requires_grad(true);
        items_.push_back(ParamT<S>{name, t, decay});
        return t;
    }

    std::vector<ParamT<S>>& items() { return items_; }
    const std::vector<ParamT<S>>& items() const { return items_; }

    const ParamT<S>& find(const std::string& name) const {
        for (const auto& p : items_)
            if (p.name == name) return p;
        throw ContractError("parameter not found: " + name);
    }

    std::int64_t total_count() const {
        std::int64_t n = 0;
        for (const auto& p : items_) n += p.tensor.size();
        return n;
    }

    void zero_grads() {
        for (auto& p : items_) p.tensor.zero_grad();
    }

private:
    std::vector<ParamT<S>> items_;
    std::unordered_set<std::string> names_;
};

// Non-trainable module state (batch-norm running statistics). Shared pointers
// keep the registry valid however the owning layers are stored.
template <typename S>
struct StateEntryT {
    std::string name;
    std::shared_ptr<std::vector<S>> data;
};

template <typename S>
class StateRegistryT {
public:
    std::shared_ptr<std::vector<S>> add(const std::string& name, std::size_t n, S init) {
        auto v = std::make_shared<std::vector<S>>(n, init);
        entries_.push_back(StateEntryT<S>{name, v});
        return v;
    }
    std::vector<StateEntryT<S>>& entries() { return entries_; }
    const std::vector<StateEntryT<S>>& entries() const { return entries_; }

private:
    std::vector<StateEntryT<S>> entries_;
};

// ---- init helpers ----

template <typename S>
void init_uniform(TensorT<S>& t, Rng& rng, double bound) {
    for (auto& v : t.vec()) v = static_cast<S>(rng.uniform(-bound, bound));
}

// Kaiming-uniform for conv/matmul weights feeding ReLU paths.
template <typename S>
void init_kaiming(TensorT<S>& t, Rng& rng, std::int64_t fan_in) {
    init_uniform(t, rng, std::sqrt(6.0 / static_cast<double>(fan_in)));
}

// uniform(+-1/sqrt(fan_in)) for fully connected layers.
template <typename S>
void init_fc(TensorT<S>& t, Rng& rng, std::int64_t fan_in) {
    init_uniform(t, rng, 1.0 / std::sqrt(static_cast<double>(fan_in)));
}

template <typename S>
void fill_const(TensorT<S>& t, S value) {
    std::fill(t.vec().begin(), t.vec().end(), value);
}

// ---- thin layer wrappers ----

template <typename S>
struct Conv2dT {
    TensorT<S> w;  // [Co,Ci,kh,kw], no bias (a norm layer follows)
    int stride = 1, pad = 0;
    TensorT<S> forward(const TensorT<S>& x) const { return conv2d(x, w, stride, pad); }
};

template <typename S>
struct Conv3dT {
    TensorT<S> w;  // [Co,Ci,kt,kh,kw]
    std::array<int, 3> stride{1, 1, 1}, pad{0, 0, 0};
    TensorT<S> forward(const TensorT<S>& x) const { return conv3d(x, w, stride, pad); }
};

template <typename S>
struct Conv1dT {
    TensorT<S> w;  // [Co,Ci,k]
    int pad = 0, dilation = 1;
    TensorT<S> forward(const TensorT<S>& x) const { return conv1d(x, w, 1, pad, dilation); }
};

template <typename S>
struct LinearT {
    TensorT<S> w;  // [K,N]
    TensorT<S> b;  // [N]
    TensorT<S> forward(const TensorT<S>& x) const { return add_row(matmul(x, w), b); }
};

template <typename S>
struct BatchNormT {
    TensorT<S> gain, bias;
    std::shared_ptr<std::vector<S>> rmean, rvar;
    TensorT<S> forward(const TensorT<S>& x, bool training) const {
        return batch_norm(x, gain, bias, *rmean, *rvar, training);
    }
};

template <typename S>
struct LayerNormT {
    TensorT<S> gain, bias;
    TensorT<S> forward(const TensorT<S>& x) const {
        return layer_norm_lastdim(x, gain, bias);
    }
};

// ---- builders (registration order defines the checkpoint layout) ----

template <typename S>
Conv2dT<S> make_conv2d(ParamStoreT<S>& ps, Rng& rng, const std::string& name, int co, int ci,
                       int k, int stride, int pad) {
    Conv2dT<S> c;
    c.w = ps.add(name + ".weight", {co, ci, k, k}, true);
    init_kaiming(c.w, rng, static_cast<std::int64_t>(ci) * k * k);
    c.stride = stride;
    c.pad = pad;
    return c;
}

template <typename S>
Conv3dT<S> make_conv3d(ParamStoreT<S>& ps, Rng& rng, const std::string& name, int co, int ci,
                       std::array<int, 3> kernel, std::array<int, 3> stride,
                       std::array<int, 3> pad) {
    Conv3dT<S> c;
    c.w = ps.add(name + ".weight", {co, ci, kernel[0], kernel[1], kernel[2]}, true);
    init_kaiming(c.w, rng, static_cast<std::int64_t>(ci) * kernel[0] * kernel[1] * kernel[2]);
    c.stride = stride;
    c.pad = pad;
    return c;
}

template <typename S>
Conv1dT<S> make_conv1d(ParamStoreT<S>& ps, Rng& rng, const std::string& name, int co, int ci,
                       int k, int pad, int dilation) {
    Conv1dT<S> c;
    c.w = ps.add(name + ".weight", {co, ci, k}, true);
    init_kaiming(c.w, rng, static_cast<std::int64_t>(ci) * k);
    c.pad = pad;
    c.dilation = dilation;
    return c;
}

template <typename S>
LinearT<S> make_linear(ParamStoreT<S>& ps, Rng& rng, const std::string& name, int in, int out) {
    LinearT<S> l;
    l.w = ps.add(name + ".weight", {in, out}, true);
    l.b = ps.add(name + ".bias", {out}, false);
    init_fc(l.w, rng, in);
    return l;
}

template <typename S>
BatchNormT<S> make_batch_norm(ParamStoreT<S>& ps, StateRegistryT<S>& sr, const std::string& name,
                              int channels) {
    BatchNormT<S> bn;
    bn.gain = ps.add(name + ".gain", {channels}, false);
    bn.bias = ps.add(name + ".bias", {channels}, false);
    fill_const(bn.gain, S(1));
    bn.rmean = sr.add(name + ".running_mean", static_cast<std::size_t>(channels), S(0));
    bn.rvar = sr.add(name + ".running_var", static_cast<std::size_t>(channels), S(1));
    return bn;
}

template <typename S>
LayerNormT<S> make_layer_norm(ParamStoreT<S>& ps, const std::string& name, int channels) {
    LayerNormT<S> ln;
    ln.gain = ps.add(name + ".gain", {channels}, false);
    ln.bias = ps.add(name + ".bias", {channels}, false);
    fill_const(ln.gain, S(1));
    return ln;
}

}  // namespace ral::nn
