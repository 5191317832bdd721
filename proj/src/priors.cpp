#include "ceph/priors.hpp"

#include <cmath>
#include <string>

#include "ceph/error.hpp"
#include "ceph/io.hpp"
#include "ceph/rng.hpp"
#include "ceph/simd.hpp"
#include "json.hpp"

namespace ceph {

std::string_view to_string(SigmaTier tier) noexcept {
    switch (tier) {
        case SigmaTier::High: return "high";
        case SigmaTier::Medium: return "medium";
        case SigmaTier::Low: return "low";
    }
    return "medium";
}

SigmaTier parse_sigma_tier(std::string_view raw) {
    if (raw == "high") return SigmaTier::High;
    if (raw == "medium") return SigmaTier::Medium;
    if (raw == "low") return SigmaTier::Low;
    throw Error(Errc::ValidationError, "unknown sigma tier '" + std::string(raw) + "'");
}

SigmaRange sigma_range(SigmaTier tier) noexcept {
    switch (tier) {
        case SigmaTier::High: return {5.0, 7.0};
        case SigmaTier::Medium: return {8.0, 13.0};
        case SigmaTier::Low: return {18.0, 22.0};
    }
    return {8.0, 13.0};
}

SigmaTable::SigmaTable() {
    auto midpoint = [](SigmaTier t) {
        auto r = sigma_range(t);
        return 0.5 * (r.lo + r.hi);
    };
    for (auto& e : entries_) e = {SigmaTier::Medium, midpoint(SigmaTier::Medium)};
    for (auto name : {LandmarkName::Sella, LandmarkName::Nasion, LandmarkName::Menton, LandmarkName::ANS,
                      LandmarkName::Pronasale}) {
        entries_[index_of(name)] = {SigmaTier::High, midpoint(SigmaTier::High)};
    }
    for (auto name : {LandmarkName::Porion, LandmarkName::PNS, LandmarkName::B_point, LandmarkName::Basion,
                      LandmarkName::Condylion}) {
        entries_[index_of(name)] = {SigmaTier::Low, midpoint(SigmaTier::Low)};
    }
    set(LandmarkName::ANS, SigmaTier::High, 7.0);
    set(LandmarkName::Gonion, SigmaTier::Medium, 12.0);
    set(LandmarkName::B_point, SigmaTier::Low, 20.0);
    set(LandmarkName::PNS, SigmaTier::Low, 22.0);
}

void SigmaTable::set(LandmarkName name, SigmaTier tier, double sigma) {
    const auto r = sigma_range(tier);
    if (!(sigma >= r.lo && sigma <= r.hi)) {
        throw Error(Errc::ValidationError,
                    "sigma " + std::to_string(sigma) + " for " + std::string(to_string(name)) + " is outside the " +
                        std::string(to_string(tier)) + " tier range",
                    std::string(to_string(name)));
    }
    entries_[index_of(name)] = {tier, sigma};
}

void SigmaTable::override_from_file(const std::filesystem::path& path, const AliasTable& aliases) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ParseError, std::string("malformed sigma table: ") + e.what(), path.string());
    }
    if (!doc.is_object()) throw Error(Errc::ParseError, "sigma table must be a JSON object", path.string());
    for (const auto& [raw, entry] : doc.items()) {
        const auto name = aliases.resolve(raw);
        try {
            const auto tier = entry.contains("tier") ? parse_sigma_tier(entry.at("tier").get<std::string>()) : at(name).tier;
            set(name, tier, entry.at("sigma").get<double>());
        } catch (const nlohmann::json::exception&) {
            throw Error(Errc::ParseError, "sigma entry for " + raw + " needs a numeric 'sigma'", path.string());
        }
    }
}

void gaussian_map_into(Point2 center, double sigma, std::size_t height, std::size_t width, std::span<double> out) {
    if (!(sigma > 0.0)) throw Error(Errc::ValidationError, "gaussian sigma must be > 0");
    if (out.size() != height * width) throw Error(Errc::ShapeMismatch, "gaussian output buffer has the wrong size");
    // Separable: exp(-(dx^2 + dy^2) / 2s^2) = exp(-dx^2 / 2s^2) * exp(-dy^2 / 2s^2).
    const double inv = 1.0 / (2.0 * sigma * sigma);
    std::vector<double> gx(width), gy(height);
    for (std::size_t x = 0; x < width; ++x) {
        const double d = static_cast<double>(x) - center.x;
        gx[x] = std::exp(-d * d * inv);
    }
    for (std::size_t y = 0; y < height; ++y) {
        const double d = static_cast<double>(y) - center.y;
        gy[y] = std::exp(-d * d * inv);
    }
    simd::active().outer_product(gy, gx, out);
}

std::vector<double> gaussian_map(Point2 center, double sigma, std::size_t height, std::size_t width) {
    std::vector<double> out(height * width);
    gaussian_map_into(center, sigma, height, width, out);
    return out;
}

PriorStack build_stack(std::span<const Landmark> landmarks, const SigmaTable& sigmas, std::size_t height,
                       std::size_t width) {
    PriorStack stack(height, width);
    for (const auto& lm : landmarks) {
        if (!lm.visible) continue;
        gaussian_map_into({lm.x, lm.y}, sigmas.sigma(lm.name), height, width, stack.channel(lm.name));
    }
    return stack;
}

PopulationStats population_stats(const Manifest& manifest) {
    const auto train = manifest.split(Split::Train);
    if (train.empty()) throw Error(Errc::MissingPopulationStats, "training split is empty");
    std::array<double, kLandmarkCount> sx{}, sy{};
    PopulationStats stats;
    for (const auto* rec : train) {
        for (const auto& lm : rec->landmarks) {
            if (!lm.visible) continue;
            const auto k = index_of(lm.name);
            sx[k] += lm.x / rec->width;
            sy[k] += lm.y / rec->height;
            ++stats.samples[k];
        }
    }
    for (std::size_t k = 0; k < kLandmarkCount; ++k) {
        if (stats.samples[k] == 0) {
            stats.missing.push_back(landmark_at(k));
            continue;
        }
        const auto n = static_cast<double>(stats.samples[k]);
        stats.mean_normalized[k] = Point2{sx[k] / n, sy[k] / n};
    }
    return stats;
}

std::string_view to_string(PriorVariant variant) noexcept {
    switch (variant) {
        case PriorVariant::GtDerived: return "gt_derived";
        case PriorVariant::Zero: return "zero";
        case PriorVariant::PopulationMean: return "population_mean";
        case PriorVariant::Random: return "random";
    }
    return "gt_derived";
}

PriorVariant parse_prior_variant(std::string_view raw) {
    if (raw == "gt" || raw == "gt_derived") return PriorVariant::GtDerived;
    if (raw == "zero") return PriorVariant::Zero;
    if (raw == "popmean" || raw == "population_mean") return PriorVariant::PopulationMean;
    if (raw == "random") return PriorVariant::Random;
    throw Error(Errc::ValidationError, "unknown prior condition '" + std::string(raw) + "'");
}

std::vector<Landmark> rescale_to_grid(std::span<const Landmark> landmarks, const ImageRecord& record,
                                      std::size_t height, std::size_t width) {
    const double fx = static_cast<double>(width) / record.width;
    const double fy = static_cast<double>(height) / record.height;
    std::vector<Landmark> out(landmarks.begin(), landmarks.end());
    for (auto& lm : out) {
        lm.x *= fx;
        lm.y *= fy;
    }
    return out;
}

PriorStack make_condition_stack(const PriorCondition& condition, const ImageRecord& record, const SigmaTable& sigmas,
                                std::size_t height, std::size_t width) {
    switch (condition.variant) {
        case PriorVariant::GtDerived:
            return build_stack(rescale_to_grid(record.landmarks, record, height, width), sigmas, height, width);
        case PriorVariant::Zero:
            return PriorStack(height, width);
        case PriorVariant::PopulationMean: {
            if (!condition.population) {
                throw Error(Errc::MissingPopulationStats, "population-mean condition needs population statistics",
                            record.id);
            }
            std::vector<Landmark> means;
            for (std::size_t k = 0; k < kLandmarkCount; ++k) {
                const auto& m = condition.population->mean_normalized[k];
                if (!m) continue;
                means.push_back({landmark_at(k), m->x * static_cast<double>(width), m->y * static_cast<double>(height), true});
            }
            return build_stack(means, sigmas, height, width);
        }
        case PriorVariant::Random: {
            if (!condition.seed) throw Error(Errc::ValidationError, "random prior condition requires a seed", record.id);
            const auto image_key = hash_string(record.id);
            std::vector<Landmark> centers;
            for (std::size_t k = 0; k < kLandmarkCount; ++k) {
                CounterRng rng(derive_key(*condition.seed, {image_key, k}));
                const double x = rng.uniform() * static_cast<double>(width - 1);
                const double y = rng.uniform() * static_cast<double>(height - 1);
                centers.push_back({landmark_at(k), x, y, true});
            }
            return build_stack(centers, sigmas, height, width);
        }
    }
    return PriorStack(height, width);
}

cgt::Tensor to_tensor(const PriorStack& stack) {
    cgt::Tensor t;
    t.channels = kLandmarkCount;
    t.height = stack.height;
    t.width = stack.width;
    for (auto name : all_landmarks()) t.channel_names.emplace_back(to_string(name));
    t.data.resize(stack.data.size());
    simd::active().narrow(stack.data, t.data);
    return t;
}

}  // namespace ceph
