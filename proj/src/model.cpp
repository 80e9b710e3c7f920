#include "cbs/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "binio.hpp"
#include "cbs/errors.hpp"
#include "cbs/rng.hpp"

namespace cbs {

namespace {

void check_finite(const std::vector<double>& v, const char* what) {
    for (const double x : v)
        if (!std::isfinite(x)) throw ValidationError(std::string(what) + " contains non-finite value");
}

// Hidden activations and probabilities for one sample, kept for backprop.
struct ForwardCache {
    std::vector<double> z1;  // pre-activation, length H
    std::vector<double> h;   // relu(z1)
    std::vector<double> p;   // softmax output, length C
};

ForwardCache run_forward(const Model& m, std::span<const double> x) {
    if (x.size() != m.in_dim) throw ValidationError("forward: feature length mismatch");
    ForwardCache f;
    f.z1.resize(m.hidden_dim);
    f.h.resize(m.hidden_dim);
    for (std::uint32_t i = 0; i < m.hidden_dim; ++i) {
        double z = m.b1[i];
        const double* row = &m.w1[static_cast<std::size_t>(i) * m.in_dim];
        for (std::uint32_t j = 0; j < m.in_dim; ++j) z += row[j] * x[j];
        f.z1[i] = z;
        f.h[i] = z > 0.0 ? z : 0.0;
    }
    std::vector<double> logits(m.out_dim);
    for (std::uint32_t c = 0; c < m.out_dim; ++c) {
        double z = m.b2[c];
        const double* row = &m.w2[static_cast<std::size_t>(c) * m.hidden_dim];
        for (std::uint32_t i = 0; i < m.hidden_dim; ++i) z += row[i] * f.h[i];
        logits[c] = z;
    }
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    f.p.resize(m.out_dim);
    for (std::uint32_t c = 0; c < m.out_dim; ++c) {
        f.p[c] = std::exp(logits[c] - zmax);
        sum += f.p[c];
    }
    for (auto& v : f.p) v /= sum;
    return f;
}

// Accumulates the gradient contribution of one sample given dL/dlogits.
void backprop(const Model& m, std::span<const double> x, const ForwardCache& f,
              const std::vector<double>& dz2, Gradients& g) {
    for (std::uint32_t c = 0; c < m.out_dim; ++c) {
        g.b2[c] += dz2[c];
        double* row = &g.w2[static_cast<std::size_t>(c) * m.hidden_dim];
        for (std::uint32_t i = 0; i < m.hidden_dim; ++i) row[i] += dz2[c] * f.h[i];
    }
    for (std::uint32_t i = 0; i < m.hidden_dim; ++i) {
        if (f.z1[i] <= 0.0) continue;
        double dh = 0.0;
        for (std::uint32_t c = 0; c < m.out_dim; ++c)
            dh += m.w2[static_cast<std::size_t>(c) * m.hidden_dim + i] * dz2[c];
        g.b1[i] += dh;
        double* row = &g.w1[static_cast<std::size_t>(i) * m.in_dim];
        for (std::uint32_t j = 0; j < m.in_dim; ++j) row[j] += dh * x[j];
    }
}

void check_batch(const Model& m, const std::vector<std::vector<double>>& features) {
    if (features.empty()) throw ValidationError("empty batch");
    for (const auto& x : features)
        if (x.size() != m.in_dim) throw ValidationError("batch feature length mismatch");
}

}  // namespace

Model make_model(std::uint32_t in_dim, std::uint32_t hidden_dim, std::uint32_t out_dim,
                 std::uint64_t seed) {
    if (in_dim < 1 || hidden_dim < 1 || out_dim < 2)
        throw ValidationError("model dims must satisfy in >= 1, hidden >= 1, out >= 2");
    Model m;
    m.in_dim = in_dim;
    m.hidden_dim = hidden_dim;
    m.out_dim = out_dim;
    m.w1.resize(static_cast<std::size_t>(hidden_dim) * in_dim);
    m.b1.assign(hidden_dim, 0.0);
    m.w2.resize(static_cast<std::size_t>(out_dim) * hidden_dim);
    m.b2.assign(out_dim, 0.0);
    Rng rng = make_rng(derive_seed(seed, stream::kInit));
    const double s1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    std::uniform_real_distribution<double> u1(-s1, s1), u2(-s2, s2);
    for (auto& w : m.w1) w = u1(rng);
    for (auto& w : m.w2) w = u2(rng);
    m.vw1.assign(m.w1.size(), 0.0);
    m.vb1.assign(m.b1.size(), 0.0);
    m.vw2.assign(m.w2.size(), 0.0);
    m.vb2.assign(m.b2.size(), 0.0);
    return m;
}

Gradients zero_gradients(const Model& m) {
    Gradients g;
    g.w1.assign(m.w1.size(), 0.0);
    g.b1.assign(m.b1.size(), 0.0);
    g.w2.assign(m.w2.size(), 0.0);
    g.b2.assign(m.b2.size(), 0.0);
    return g;
}

void add_scaled(Gradients& dst, const Gradients& src, double scale) {
    if (dst.w1.size() != src.w1.size() || dst.b1.size() != src.b1.size() ||
        dst.w2.size() != src.w2.size() || dst.b2.size() != src.b2.size())
        throw ValidationError("gradient shape mismatch");
    for (std::size_t i = 0; i < dst.w1.size(); ++i) dst.w1[i] += scale * src.w1[i];
    for (std::size_t i = 0; i < dst.b1.size(); ++i) dst.b1[i] += scale * src.b1[i];
    for (std::size_t i = 0; i < dst.w2.size(); ++i) dst.w2[i] += scale * src.w2[i];
    for (std::size_t i = 0; i < dst.b2.size(); ++i) dst.b2[i] += scale * src.b2[i];
}

std::vector<double> forward(const Model& m, std::span<const double> features) {
    return run_forward(m, features).p;
}

std::pair<double, Gradients> soft_ce_loss_and_grad(const Model& m,
                                                   const std::vector<std::vector<double>>& features,
                                                   const std::vector<std::vector<double>>& targets,
                                                   const std::vector<double>& weights) {
    check_batch(m, features);
    if (targets.size() != features.size() || weights.size() != features.size())
        throw ValidationError("batch size mismatch between features, targets, weights");
    double wsum = 0.0;
    for (const double w : weights) {
        if (!(w >= 0.0)) throw ValidationError("sample weight must be >= 0");
        wsum += w;
    }
    if (!(wsum > 0.0)) throw ValidationError("sample weights sum to zero");
    for (const auto& y : targets) {
        if (y.size() != m.out_dim) throw ValidationError("target length mismatch");
        double s = 0.0;
        for (const double v : y) {
            if (!(v >= 0.0)) throw ValidationError("target must be nonnegative");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-6) throw ValidationError("target must sum to 1");
    }

    double loss = 0.0;
    Gradients g = zero_gradients(m);
    std::vector<double> dz2(m.out_dim);
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (weights[i] == 0.0) continue;
        const ForwardCache f = run_forward(m, features[i]);
        const double scale = weights[i] / wsum;
        double ell = 0.0;
        for (std::uint32_t c = 0; c < m.out_dim; ++c) {
            if (targets[i][c] > 0.0) ell -= targets[i][c] * std::log(f.p[c]);
            dz2[c] = scale * (f.p[c] - targets[i][c]);
        }
        loss += scale * ell;
        backprop(m, features[i], f, dz2, g);
    }
    return {loss, std::move(g)};
}

std::pair<double, Gradients> entropy_loss_and_grad(
    const Model& m, const std::vector<std::vector<double>>& features) {
    check_batch(m, features);
    const double scale = 1.0 / static_cast<double>(features.size());
    double loss = 0.0;
    Gradients g = zero_gradients(m);
    std::vector<double> dz2(m.out_dim);
    for (const auto& x : features) {
        const ForwardCache f = run_forward(m, x);
        double ent = 0.0;
        for (const double p : f.p)
            if (p > 0.0) ent -= p * std::log(p);
        loss += scale * ent;
        // dH/dz_c = -p_c (log p_c + H)
        for (std::uint32_t c = 0; c < m.out_dim; ++c) {
            const double logp = f.p[c] > 0.0 ? std::log(f.p[c]) : 0.0;
            dz2[c] = scale * (-f.p[c] * (logp + ent));
        }
        backprop(m, x, f, dz2, g);
    }
    return {loss, std::move(g)};
}

void sgd_step(Model& m, const Gradients& g, double lr, double momentum, double weight_decay) {
    if (!(lr >= 0.0)) throw ValidationError("lr must be >= 0");
    if (g.w1.size() != m.w1.size() || g.b1.size() != m.b1.size() || g.w2.size() != m.w2.size() ||
        g.b2.size() != m.b2.size())
        throw ValidationError("gradient shape mismatch");
    auto apply = [&](std::vector<double>& theta, std::vector<double>& v,
                     const std::vector<double>& grad) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            v[i] = momentum * v[i] + (grad[i] + weight_decay * theta[i]);
            theta[i] -= lr * v[i];
        }
    };
    apply(m.w1, m.vw1, g.w1);
    apply(m.b1, m.vb1, g.b1);
    apply(m.w2, m.vw2, g.w2);
    apply(m.b2, m.vb2, g.b2);
    check_finite(m.w1, "w1");
    check_finite(m.b1, "b1");
    check_finite(m.w2, "w2");
    check_finite(m.b2, "b2");
}

double cosine_lr(double initial_lr, std::uint64_t t, std::uint64_t total) {
    if (!(initial_lr > 0.0)) throw ValidationError("initial_lr must be > 0");
    if (total == 0) throw ValidationError("schedule length must be > 0");
    if (t > total) throw ValidationError("schedule position past the end");
    const double frac = static_cast<double>(t) / static_cast<double>(total);
    return initial_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kCkptMagic[4] = {'C', 'B', 'S', 'M'};

void put_array(std::vector<unsigned char>& buf, const std::vector<double>& v) {
    for (const double x : v) binio::put_f64(buf, x);
}

void read_array(binio::Reader& in, std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (auto& x : v) x = in.f64();
}

}  // namespace

void save_checkpoint(const Model& m, std::uint64_t epoch, const std::string& path) {
    std::vector<unsigned char> buf;
    binio::put_u32(buf, kCheckpointFormatVersion);
    binio::put_u32(buf, m.in_dim);
    binio::put_u32(buf, m.hidden_dim);
    binio::put_u32(buf, m.out_dim);
    binio::put_u64(buf, epoch);
    put_array(buf, m.w1);
    put_array(buf, m.b1);
    put_array(buf, m.w2);
    put_array(buf, m.b2);
    put_array(buf, m.vw1);
    put_array(buf, m.vb1);
    put_array(buf, m.vw2);
    put_array(buf, m.vb2);
    binio::put_u32(buf, binio::crc_of(buf));

    binio::Writer out(path);
    out.write({kCkptMagic, kCkptMagic + 4});
    out.write(buf);
    out.close();
}

Checkpoint load_checkpoint(const std::string& path) {
    binio::Reader in(path);
    unsigned char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, kCkptMagic, 4) != 0) throw IoError("bad magic in " + path);

    std::vector<unsigned char> buf;
    const std::uint32_t version = in.u32();
    binio::put_u32(buf, version);
    if (version != kCheckpointFormatVersion)
        throw IoError("unsupported checkpoint format version " + std::to_string(version));

    Checkpoint ck;
    Model& m = ck.model;
    m.in_dim = in.u32();
    m.hidden_dim = in.u32();
    m.out_dim = in.u32();
    ck.epoch = in.u64();
    if (m.in_dim < 1 || m.hidden_dim < 1 || m.out_dim < 2)
        throw IoError("checkpoint header has invalid dimensions");
    binio::put_u32(buf, m.in_dim);
    binio::put_u32(buf, m.hidden_dim);
    binio::put_u32(buf, m.out_dim);
    binio::put_u64(buf, ck.epoch);

    const std::size_t nw1 = static_cast<std::size_t>(m.hidden_dim) * m.in_dim;
    const std::size_t nw2 = static_cast<std::size_t>(m.out_dim) * m.hidden_dim;
    for (auto [vec, n] : {std::pair{&m.w1, nw1}, {&m.b1, std::size_t{m.hidden_dim}},
                          {&m.w2, nw2}, {&m.b2, std::size_t{m.out_dim}},
                          {&m.vw1, nw1}, {&m.vb1, std::size_t{m.hidden_dim}},
                          {&m.vw2, nw2}, {&m.vb2, std::size_t{m.out_dim}}}) {
        read_array(in, *vec, n);
        put_array(buf, *vec);
    }
    if (in.u32() != binio::crc_of(buf)) throw IoError("checkpoint checksum mismatch: " + path);
    for (const auto* vec : {&m.w1, &m.b1, &m.w2, &m.b2})
        for (const double x : *vec)
            if (!std::isfinite(x)) throw IoError("checkpoint contains non-finite parameter");
    return ck;
}

}  // namespace cbs
