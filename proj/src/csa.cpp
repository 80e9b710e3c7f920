#include "cbs/csa.hpp"

#include <algorithm>
#include <random>

#include "cbs/errors.hpp"

namespace cbs {

double draw_coefficient(Rng& rng, double phi) {
    if (!(phi > 0.0)) throw ValidationError("phi must be > 0");
    // Beta(phi, phi) via two gamma draws.
    std::gamma_distribution<double> gamma(phi, 1.0);
    const double a = gamma(rng);
    const double b = gamma(rng);
    const double lp = (a + b) > 0.0 ? a / (a + b) : 0.5;
    return std::max(lp, 1.0 - lp);
}

MixedSample mix(std::uint64_t id_i, std::span<const double> x_i, std::uint32_t y_i,
                std::span<const double> p_i, std::uint64_t id_j, std::span<const double> x_j,
                std::uint32_t y_j, std::span<const double> p_j, double l,
                std::uint32_t num_classes) {
    if (x_i.size() != x_j.size()) throw ValidationError("mix: feature length mismatch");
    if (p_i.size() != num_classes || p_j.size() != num_classes)
        throw ValidationError("mix: probability length mismatch");
    if (y_i >= num_classes || y_j >= num_classes) throw ValidationError("mix: label out of range");
    if (!(l >= 0.5 && l <= 1.0)) throw ValidationError("mix: coefficient outside [0.5, 1]");

    const double conf_i = *std::max_element(p_i.begin(), p_i.end());
    const double conf_j = *std::max_element(p_j.begin(), p_j.end());
    const bool i_leads = conf_i >= conf_j;
    const double wi = i_leads ? l : 1.0 - l;
    const double wj = 1.0 - wi;

    MixedSample out;
    out.mix_coefficient = l;
    out.donor_i = id_i;
    out.donor_j = id_j;
    out.features.resize(x_i.size());
    for (std::size_t k = 0; k < x_i.size(); ++k) out.features[k] = wi * x_i[k] + wj * x_j[k];
    out.soft_label.assign(num_classes, 0.0);
    out.soft_label[y_i] += wi;
    out.soft_label[y_j] += wj;
    return out;
}

std::vector<MixedSample> augment_clean_batch(const TrainView& data,
                                             const std::vector<std::size_t>& clean_positions,
                                             const Model& snapshot, double phi, Rng& rng) {
    std::vector<MixedSample> out;
    if (clean_positions.empty()) return out;
    for (const auto pos : clean_positions)
        if (pos >= data.size()) throw ValidationError("clean position out of range");

    std::vector<std::vector<double>> probs;
    probs.reserve(clean_positions.size());
    for (const auto pos : clean_positions) probs.push_back(forward(snapshot, data.features(pos)));

    std::uniform_int_distribution<std::size_t> pick(0, clean_positions.size() - 1);
    out.reserve(clean_positions.size());
    for (std::size_t k = 0; k < clean_positions.size(); ++k) {
        const std::size_t m = pick(rng);
        const double l = draw_coefficient(rng, phi);
        const std::size_t a = clean_positions[k], b = clean_positions[m];
        out.push_back(mix(data.id(a), data.features(a), data.label(a), probs[k], data.id(b),
                          data.features(b), data.label(b), probs[m], l, data.num_classes()));
    }
    return out;
}

}  // namespace cbs
