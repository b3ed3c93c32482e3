#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "vcat/errors.hpp"
#include "vcat/rng.hpp"

namespace vcat {

enum class Act : std::uint8_t { tanh = 0, relu = 1, identity = 2 };

inline double apply_act(Act a, double z) {
    switch (a) {
        case Act::tanh: return std::tanh(z);
        case Act::relu: return z > 0.0 ? z : 0.0;
        case Act::identity: return z;
    }
    return z;
}

inline double act_grad(Act a, double z) {
    switch (a) {
        case Act::tanh: {
            const double y = std::tanh(z);
            return 1.0 - y * y;
        }
        case Act::relu: return z > 0.0 ? 1.0 : 0.0;
        case Act::identity: return 1.0;
    }
    return 1.0;
}

// Dense feedforward net. weights[l] is row-major (dims[l+1] x dims[l]).
// Adam moments live with the net; version counts parameter mutations so a
// stale tape can be rejected.
struct MlpNet {
    std::vector<int> layer_dims;
    std::vector<Act> activations; // one per transition
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
    std::int64_t adam_steps = 0;
    std::int64_t version = 0;

    std::size_t num_layers() const { return weights.size(); }
    int in_dim() const { return layer_dims.front(); }
    int out_dim() const { return layer_dims.back(); }
};

struct GradientTape {
    std::vector<std::vector<double>> inputs;  // input to each transition
    std::vector<std::vector<double>> preacts; // z = Wx + b per transition
    std::int64_t version = -1;
};

struct ParamGrads {
    std::vector<std::vector<double>> d_w;
    std::vector<std::vector<double>> d_b;
};

inline MlpNet net_init(const std::vector<int>& layer_dims, const std::vector<Act>& activations,
                       Rng& rng) {
    if (layer_dims.size() < 2) throw ConfigError("net needs at least two layers");
    for (int d : layer_dims)
        if (d < 1) throw ConfigError("layer width must be >= 1");
    if (activations.size() != layer_dims.size() - 1)
        throw ConfigError("need one activation per layer transition");

    MlpNet n;
    n.layer_dims = layer_dims;
    n.activations = activations;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const int fan_in = layer_dims[l];
        const int fan_out = layer_dims[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::vector<double> w(static_cast<std::size_t>(fan_in) * fan_out);
        for (double& x : w) x = rng.uniform(-bound, bound);
        n.weights.push_back(std::move(w));
        n.biases.push_back(std::vector<double>(fan_out, 0.0));
        n.m_w.push_back(std::vector<double>(static_cast<std::size_t>(fan_in) * fan_out, 0.0));
        n.v_w.push_back(std::vector<double>(static_cast<std::size_t>(fan_in) * fan_out, 0.0));
        n.m_b.push_back(std::vector<double>(fan_out, 0.0));
        n.v_b.push_back(std::vector<double>(fan_out, 0.0));
    }
    return n;
}

// Forward pass; fills tape when given one.
inline std::vector<double> net_forward(const MlpNet& n, const std::vector<double>& input,
                                       GradientTape* tape = nullptr) {
    if (static_cast<int>(input.size()) != n.in_dim())
        throw UsageError("forward: input size mismatch");
    if (tape) {
        tape->inputs.assign(n.num_layers(), {});
        tape->preacts.assign(n.num_layers(), {});
        tape->version = n.version;
    }
    std::vector<double> x = input;
    for (std::size_t l = 0; l < n.num_layers(); ++l) {
        const int rows = n.layer_dims[l + 1];
        const int cols = n.layer_dims[l];
        std::vector<double> z(rows);
        const double* w = n.weights[l].data();
        for (int r = 0; r < rows; ++r) {
            double acc = n.biases[l][r];
            const double* wr = w + static_cast<std::size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) acc += wr[c] * x[c];
            z[r] = acc;
        }
        if (tape) {
            tape->inputs[l] = std::move(x);
            tape->preacts[l] = z;
        }
        x.resize(rows);
        for (int r = 0; r < rows; ++r) x[r] = apply_act(n.activations[l], z[r]);
    }
    return x;
}

inline ParamGrads grads_like(const MlpNet& n) {
    ParamGrads g;
    for (std::size_t l = 0; l < n.num_layers(); ++l) {
        g.d_w.push_back(std::vector<double>(n.weights[l].size(), 0.0));
        g.d_b.push_back(std::vector<double>(n.biases[l].size(), 0.0));
    }
    return g;
}

// Accumulates scale * d(output . output_grad)/d(params) into acc; returns the
// input gradient. The hot path for minibatch updates.
inline std::vector<double> net_backward_accum(const MlpNet& n, const GradientTape& tape,
                                              const std::vector<double>& output_grad,
                                              ParamGrads& acc, double scale = 1.0) {
    if (tape.version != n.version) throw UsageError("backward: stale tape");
    if (static_cast<int>(output_grad.size()) != n.out_dim())
        throw UsageError("backward: output_grad size mismatch");

    std::vector<double> delta = output_grad;
    for (std::size_t li = n.num_layers(); li-- > 0;) {
        const int rows = n.layer_dims[li + 1];
        const int cols = n.layer_dims[li];
        const std::vector<double>& z = tape.preacts[li];
        const std::vector<double>& x = tape.inputs[li];
        for (int r = 0; r < rows; ++r) delta[r] *= act_grad(n.activations[li], z[r]);

        double* dw = acc.d_w[li].data();
        for (int r = 0; r < rows; ++r) {
            const double dr = delta[r] * scale;
            acc.d_b[li][r] += dr;
            double* dwr = dw + static_cast<std::size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) dwr[c] += dr * x[c];
        }

        std::vector<double> prev(cols, 0.0);
        const double* w = n.weights[li].data();
        for (int r = 0; r < rows; ++r) {
            const double dr = delta[r];
            const double* wr = w + static_cast<std::size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) prev[c] += dr * wr[c];
        }
        delta = std::move(prev);
    }
    return delta;
}

inline ParamGrads net_backward(const MlpNet& n, const GradientTape& tape,
                               const std::vector<double>& output_grad) {
    ParamGrads g = grads_like(n);
    net_backward_accum(n, tape, output_grad, g);
    return g;
}

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

inline void adam_step(MlpNet& n, const ParamGrads& g, double lr, AdamConfig cfg = {}) {
    for (std::size_t l = 0; l < n.num_layers(); ++l) {
        for (double x : g.d_w[l])
            if (!std::isfinite(x)) throw NumericError("adam: non-finite weight gradient");
        for (double x : g.d_b[l])
            if (!std::isfinite(x)) throw NumericError("adam: non-finite bias gradient");
    }

    n.adam_steps += 1;
    const double t = static_cast<double>(n.adam_steps);
    const double corr1 = 1.0 - std::pow(cfg.beta1, t);
    const double corr2 = 1.0 - std::pow(cfg.beta2, t);

    const auto update = [&](std::vector<double>& p, const std::vector<double>& d,
                            std::vector<double>& m, std::vector<double>& v) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * d[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * d[i] * d[i];
            const double mh = m[i] / corr1;
            const double vh = v[i] / corr2;
            p[i] -= lr * mh / (std::sqrt(vh) + cfg.eps);
        }
    };
    for (std::size_t l = 0; l < n.num_layers(); ++l) {
        update(n.weights[l], g.d_w[l], n.m_w[l], n.v_w[l]);
        update(n.biases[l], g.d_b[l], n.m_b[l], n.v_b[l]);
    }
    n.version += 1;

    for (std::size_t l = 0; l < n.num_layers(); ++l) {
        for (double x : n.weights[l])
            if (!std::isfinite(x)) throw NumericError("adam: non-finite parameter after update");
    }
}

// FNV-1a over the parameter bytes; freeze contracts are checked with this.
inline std::uint64_t net_checksum(const MlpNet& n) {
    std::uint64_t h = 1469598103934665603ULL;
    const auto mix = [&](const std::vector<double>& v) {
        for (double d : v) {
            std::uint64_t bits;
            std::memcpy(&bits, &d, sizeof(bits));
            for (int i = 0; i < 8; ++i) {
                h ^= (bits >> (8 * i)) & 0xffULL;
                h *= 1099511628211ULL;
            }
        }
    };
    for (const auto& w : n.weights) mix(w);
    for (const auto& b : n.biases) mix(b);
    return h;
}

// --- Serialization ---
// Layout: "VCAT" | u32 version | u32 n_layers | u32 dims[n_layers] |
// u8 act[n_layers-1] | f64 weights+biases per transition, little endian.

namespace detail {

constexpr std::uint32_t kCkptVersion = 1;

inline std::uint64_t bswap64(std::uint64_t v) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xffULL);
    return r;
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw FormatError("checkpoint truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline void put_f64(std::ostream& os, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    if constexpr (std::endian::native == std::endian::big) bits = bswap64(bits);
    os.write(reinterpret_cast<const char*>(&bits), 8);
}

inline double get_f64(std::istream& is) {
    std::uint64_t bits;
    if (!is.read(reinterpret_cast<char*>(&bits), 8)) throw FormatError("checkpoint truncated");
    if constexpr (std::endian::native == std::endian::big) bits = bswap64(bits);
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
}

} // namespace detail

inline void net_save(const MlpNet& n, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open for write: " + path);
    os.write("VCAT", 4);
    detail::put_u32(os, detail::kCkptVersion);
    detail::put_u32(os, static_cast<std::uint32_t>(n.layer_dims.size()));
    for (int d : n.layer_dims) detail::put_u32(os, static_cast<std::uint32_t>(d));
    for (Act a : n.activations) os.put(static_cast<char>(a));
    for (std::size_t l = 0; l < n.num_layers(); ++l) {
        for (double w : n.weights[l]) detail::put_f64(os, w);
        for (double b : n.biases[l]) detail::put_f64(os, b);
    }
    if (!os) throw FormatError("write failed: " + path);
}

inline MlpNet net_load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open for read: " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "VCAT", 4) != 0)
        throw FormatError("bad checkpoint magic: " + path);
    const std::uint32_t ver = detail::get_u32(is);
    if (ver != detail::kCkptVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(ver));
    const std::uint32_t n_layers = detail::get_u32(is);
    if (n_layers < 2 || n_layers > 64) throw FormatError("implausible layer count");

    MlpNet n;
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        const std::uint32_t d = detail::get_u32(is);
        if (d < 1 || d > 1u << 20) throw FormatError("implausible layer width");
        n.layer_dims.push_back(static_cast<int>(d));
    }
    for (std::uint32_t i = 0; i + 1 < n_layers; ++i) {
        const int c = is.get();
        if (c < 0) throw FormatError("checkpoint truncated");
        if (c > 2) throw FormatError("unknown activation tag");
        n.activations.push_back(static_cast<Act>(c));
    }
    for (std::uint32_t l = 0; l + 1 < n_layers; ++l) {
        const std::size_t nw =
            static_cast<std::size_t>(n.layer_dims[l]) * n.layer_dims[l + 1];
        std::vector<double> w(nw);
        for (double& x : w) x = detail::get_f64(is);
        std::vector<double> b(n.layer_dims[l + 1]);
        for (double& x : b) x = detail::get_f64(is);
        n.weights.push_back(std::move(w));
        n.biases.push_back(std::move(b));
        n.m_w.push_back(std::vector<double>(nw, 0.0));
        n.v_w.push_back(std::vector<double>(nw, 0.0));
        n.m_b.push_back(std::vector<double>(n.biases.back().size(), 0.0));
        n.v_b.push_back(std::vector<double>(n.biases.back().size(), 0.0));
    }
    is.get();
    if (!is.eof()) throw FormatError("trailing bytes in checkpoint: " + path);
    return n;
}

} // namespace vcat
