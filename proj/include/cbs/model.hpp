#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cbs {

/// One-hidden-layer softmax classifier, in_dim -> hidden_dim (ReLU) ->
/// out_dim, with SGD momentum buffers stored alongside the parameters.
/// Weight matrices are row-major: w1 is hidden_dim x in_dim, w2 is
/// out_dim x hidden_dim. All math is double precision.
struct Model {
    std::uint32_t in_dim = 0;
    std::uint32_t hidden_dim = 0;
    std::uint32_t out_dim = 0;
    std::vector<double> w1, b1, w2, b2;
    std::vector<double> vw1, vb1, vw2, vb2;  // momentum buffers, shape-matched
};

/// Seeded init: weights uniform in +-1/sqrt(fan_in), biases and momentum zero.
Model make_model(std::uint32_t in_dim, std::uint32_t hidden_dim, std::uint32_t out_dim,
                 std::uint64_t seed);

/// Gradient of the loss w.r.t. the parameters (momentum excluded).
struct Gradients {
    std::vector<double> w1, b1, w2, b2;
};

Gradients zero_gradients(const Model& m);

/// dst += scale * src, shape-checked.
void add_scaled(Gradients& dst, const Gradients& src, double scale);

/// Softmax probabilities for one input, max-subtracted for stability.
/// Pure: identical (model, features) give bitwise-identical output.
std::vector<double> forward(const Model& m, std::span<const double> features);

/// Index of the largest entry, lowest index on ties.
inline std::size_t argmax_low(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

/// Weighted soft-target cross-entropy over a batch:
///   loss = sum_i w_i * (-sum_c y_i^c log p_i^c) / sum_i w_i
/// Targets must be distributions; weights nonnegative with positive sum.
/// The returned gradient is the exact analytic gradient of that expression.
std::pair<double, Gradients> soft_ce_loss_and_grad(const Model& m,
                                                   const std::vector<std::vector<double>>& features,
                                                   const std::vector<std::vector<double>>& targets,
                                                   const std::vector<double>& weights);

/// Mean prediction entropy -sum_c p^c log p^c over a batch, with gradient.
/// Minimized during warm-up to sharpen predictions.
std::pair<double, Gradients> entropy_loss_and_grad(
    const Model& m, const std::vector<std::vector<double>>& features);

/// Classical momentum: v <- momentum*v + (g + weight_decay*theta);
/// theta <- theta - lr*v.
void sgd_step(Model& m, const Gradients& g, double lr, double momentum = 0.9,
              double weight_decay = 0.0);

/// Cosine annealing from initial_lr at t=0 down to 0 at t=total.
double cosine_lr(double initial_lr, std::uint64_t t, std::uint64_t total);

// ---------------------------------------------------------------------------
// Checkpoints.
//
// Binary layout (little-endian):
//   magic "CBSM" | u32 version | u32 in | u32 hidden | u32 out | u64 epoch
//   then f64 arrays w1 b1 w2 b2 vw1 vb1 vw2 vb2 | u32 crc32
// where the crc32 covers everything after the magic.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct Checkpoint {
    Model model;
    std::uint64_t epoch = 0;
};

void save_checkpoint(const Model& m, std::uint64_t epoch, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cbs
