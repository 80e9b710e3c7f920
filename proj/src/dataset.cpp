#include "cbs/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "binio.hpp"
#include "cbs/errors.hpp"
#include "cbs/rng.hpp"

namespace cbs {

namespace {

void validate_spec(const DatasetSpec& spec) {
    if (spec.num_classes < 2) throw ValidationError("num_classes must be >= 2");
    if (spec.base_count < 1) throw ValidationError("base_count must be >= 1");
    if (spec.imbalance_factor < 1.0) throw ValidationError("imbalance_factor must be >= 1");
    if (spec.noise_rate < 0.0 || spec.noise_rate >= 1.0)
        throw ValidationError("noise_rate must be in [0, 1)");
    if (spec.feature_dim < 1) throw ValidationError("feature_dim must be >= 1");
    if (!(spec.class_separation > 0.0)) throw ValidationError("class_separation must be > 0");
}

std::vector<std::vector<double>> make_centroids(std::uint32_t num_classes, std::uint32_t dim,
                                                double separation, std::uint64_t seed) {
    std::vector<std::vector<double>> centroids(num_classes, std::vector<double>(dim, 0.0));
    if (num_classes <= dim) {
        // Scaled coordinate basis: pairwise distance is exactly `separation`.
        const double scale = separation / std::sqrt(2.0);
        for (std::uint32_t c = 0; c < num_classes; ++c) centroids[c][c] = scale;
        return centroids;
    }
    // More classes than dimensions: random directions, rescaled so the
    // closest pair sits exactly `separation` apart.
    Rng rng = make_rng(derive_seed(seed, stream::kCentroids));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& c : centroids)
        for (auto& v : c) v = gauss(rng);
    double min_dist2 = std::numeric_limits<double>::infinity();
    for (std::uint32_t a = 0; a < num_classes; ++a) {
        for (std::uint32_t b = a + 1; b < num_classes; ++b) {
            double d2 = 0.0;
            for (std::uint32_t k = 0; k < dim; ++k) {
                const double diff = centroids[a][k] - centroids[b][k];
                d2 += diff * diff;
            }
            min_dist2 = std::min(min_dist2, d2);
        }
    }
    if (!(min_dist2 > 0.0)) throw ValidationError("degenerate centroid draw");
    const double scale = separation / std::sqrt(min_dist2);
    for (auto& c : centroids)
        for (auto& v : c) v *= scale;
    return centroids;
}

double quantize_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

std::vector<Sample> draw_around_centroids(const std::vector<std::vector<double>>& centroids,
                                          const std::vector<std::size_t>& counts,
                                          std::uint32_t dim, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Sample> samples;
    std::size_t total = 0;
    for (const auto n : counts) total += n;
    samples.reserve(total);
    std::uint64_t next_id = 0;
    for (std::uint32_t c = 0; c < counts.size(); ++c) {
        for (std::size_t k = 0; k < counts[c]; ++k) {
            Sample s;
            s.id = next_id++;
            s.observed_label = c;
            s.true_label = c;
            s.features.resize(dim);
            for (std::uint32_t j = 0; j < dim; ++j)
                s.features[j] = quantize_f32(centroids[c][j] + gauss(rng));
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

}  // namespace

Dataset::Dataset(std::uint32_t num_classes, std::uint32_t feature_dim, std::vector<Sample> samples)
    : num_classes_(num_classes), feature_dim_(feature_dim), samples_(std::move(samples)) {
    for (const auto& s : samples_) {
        if (s.features.size() != feature_dim_) throw ValidationError("sample feature_dim mismatch");
        if (s.observed_label >= num_classes_ || s.true_label >= num_classes_)
            throw ValidationError("sample label out of range");
    }
}

double decay_ratio(std::uint32_t num_classes, double imbalance_factor) {
    if (num_classes < 2) throw ValidationError("num_classes must be >= 2");
    if (imbalance_factor < 1.0) throw ValidationError("imbalance_factor must be >= 1");
    return std::pow(imbalance_factor, -1.0 / static_cast<double>(num_classes - 1));
}

std::vector<std::size_t> planned_class_counts(const DatasetSpec& spec) {
    validate_spec(spec);
    const double mu = decay_ratio(spec.num_classes, spec.imbalance_factor);
    std::vector<std::size_t> counts(spec.num_classes);
    for (std::uint32_t i = 0; i < spec.num_classes; ++i) {
        const double exact = static_cast<double>(spec.base_count) * std::pow(mu, i);
        const long long n = std::llround(exact);
        if (n < 1) {
            std::ostringstream msg;
            msg << "class " << i << " count rounds to " << n
                << "; imbalance_factor too large for base_count " << spec.base_count;
            throw ValidationError(msg.str());
        }
        counts[i] = static_cast<std::size_t>(n);
    }
    return counts;
}

std::uint32_t base_count_for_total(std::uint32_t num_classes, double imbalance_factor,
                                   std::uint64_t target_total) {
    if (target_total < num_classes) throw ValidationError("target_total smaller than num_classes");
    const double mu = decay_ratio(num_classes, imbalance_factor);
    double geo_sum = 0.0;
    for (std::uint32_t i = 0; i < num_classes; ++i) geo_sum += std::pow(mu, i);
    auto total_for = [&](std::uint32_t n0) {
        std::uint64_t total = 0;
        for (std::uint32_t i = 0; i < num_classes; ++i)
            total += static_cast<std::uint64_t>(
                std::max(1LL, std::llround(static_cast<double>(n0) * std::pow(mu, i))));
        return total;
    };
    auto n0 = static_cast<std::uint32_t>(
        std::max(1.0, std::floor(static_cast<double>(target_total) / geo_sum)));
    while (total_for(n0) < target_total) ++n0;
    while (n0 > 1 && total_for(n0 - 1) >= target_total) --n0;
    return n0;
}

Dataset generate_blobs(const DatasetSpec& spec) {
    const auto counts = planned_class_counts(spec);
    const auto centroids =
        make_centroids(spec.num_classes, spec.feature_dim, spec.class_separation, spec.seed);
    Rng rng = make_rng(derive_seed(spec.seed, stream::kBlobNoise));
    auto samples = draw_around_centroids(centroids, counts, spec.feature_dim, rng);
    return Dataset(spec.num_classes, spec.feature_dim, std::move(samples));
}

Dataset inject_uniform_noise(const Dataset& ds, double eta, std::uint64_t seed) {
    if (eta < 0.0 || eta >= 1.0) throw ValidationError("noise rate must be in [0, 1)");
    const std::uint32_t C = ds.num_classes();
    Rng rng = make_rng(derive_seed(seed, stream::kLabelNoise));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<std::uint32_t> other(0, C - 2);
    std::vector<Sample> samples = ds.samples();
    for (auto& s : samples) {
        if (unif(rng) < eta) {
            const std::uint32_t k = other(rng);
            s.observed_label = (k >= s.true_label) ? k + 1 : k;
        } else {
            s.observed_label = s.true_label;
        }
    }
    return Dataset(C, ds.feature_dim(), std::move(samples));
}

Dataset make_test_split(const DatasetSpec& train_spec, std::uint32_t per_class) {
    validate_spec(train_spec);
    if (per_class < 1) throw ValidationError("per_class must be >= 1");
    const auto centroids = make_centroids(train_spec.num_classes, train_spec.feature_dim,
                                          train_spec.class_separation, train_spec.seed);
    Rng rng = make_rng(derive_seed(train_spec.seed, stream::kTestSplit));
    std::vector<std::size_t> counts(train_spec.num_classes, per_class);
    auto samples = draw_around_centroids(centroids, counts, train_spec.feature_dim, rng);
    return Dataset(train_spec.num_classes, train_spec.feature_dim, std::move(samples));
}

std::vector<std::size_t> class_counts(const Dataset& ds) {
    std::vector<std::size_t> counts(ds.num_classes(), 0);
    for (const auto& s : ds.samples()) ++counts[s.observed_label];
    return counts;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'C', 'B', 'S', 'D'};

using binio::crc_of;
using binio::put_f32;
using binio::put_u32;
using binio::put_u64;

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    binio::Writer out(path);
    std::vector<unsigned char> buf;
    buf.insert(buf.end(), kMagic, kMagic + 4);
    put_u32(buf, kDatasetFormatVersion);
    put_u32(buf, ds.num_classes());
    put_u32(buf, ds.feature_dim());
    put_u64(buf, ds.size());
    out.write(buf);

    std::vector<unsigned char> rec;
    for (const auto& s : ds.samples()) {
        rec.clear();
        put_u64(rec, s.id);
        put_u32(rec, s.observed_label);
        put_u32(rec, s.true_label);
        for (const double f : s.features) put_f32(rec, static_cast<float>(f));
        put_u32(rec, crc_of(rec));
        out.write(rec);
    }
    out.close();
}

Dataset load_dataset(const std::string& path) {
    binio::Reader in(path);
    unsigned char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw IoError("bad magic in " + path);
    const std::uint32_t version = in.u32();
    if (version != kDatasetFormatVersion)
        throw IoError("unsupported dataset format version " + std::to_string(version));
    const std::uint32_t C = in.u32();
    const std::uint32_t d = in.u32();
    const std::uint64_t n = in.u64();

    std::vector<Sample> samples;
    samples.reserve(n);
    std::vector<unsigned char> rec;
    for (std::uint64_t i = 0; i < n; ++i) {
        Sample s;
        s.id = in.u64();
        s.observed_label = in.u32();
        s.true_label = in.u32();
        s.features.resize(d);
        rec.clear();
        put_u64(rec, s.id);
        put_u32(rec, s.observed_label);
        put_u32(rec, s.true_label);
        for (std::uint32_t j = 0; j < d; ++j) {
            const float f = in.f32();
            put_f32(rec, f);
            s.features[j] = static_cast<double>(f);
        }
        if (in.u32() != crc_of(rec))
            throw IoError("record checksum mismatch at sample " + std::to_string(i));
        if (s.observed_label >= C || s.true_label >= C)
            throw IoError("label out of range at sample " + std::to_string(i));
        for (const double f : s.features)
            if (!std::isfinite(f)) throw IoError("non-finite feature at sample " + std::to_string(i));
        samples.push_back(std::move(s));
    }
    return Dataset(C, d, std::move(samples));
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "id,observed,true";
    for (std::uint32_t j = 0; j < ds.feature_dim(); ++j) out << ",f" << j;
    out << "\n";
    out.precision(9);
    for (const auto& s : ds.samples()) {
        out << s.id << ',' << s.observed_label << ',' << s.true_label;
        for (const double f : s.features) out << ',' << f;
        out << "\n";
    }
    if (!out) throw IoError("write failure: " + path);
}

}  // namespace cbs
