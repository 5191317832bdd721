#include "ceph/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "ceph/error.hpp"
#include "ceph/io.hpp"
#include "ceph/rng.hpp"

namespace ceph::stats {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size()) {
        throw Error(Errc::LengthMismatch, std::string(what) + ": inputs differ in length (" + std::to_string(a.size()) +
                                              " vs " + std::to_string(b.size()) + ")");
    }
}

std::vector<double> differences(std::span<const double> a, std::span<const double> b) {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = b[i] - a[i];
    return d;
}

std::string group_key(const ErrorRow& row, Grouping g) {
    switch (g) {
        case Grouping::All: return "all";
        case Grouping::PerLandmark: return std::string(to_string(row.landmark));
        case Grouping::PerSource: return row.source;
    }
    return "all";
}

// Mean computed about the first value, so a constant input returns that
// constant exactly.
double shifted_mean(std::span<const double> values) {
    const double anchor = values.front();
    double acc = 0.0;
    for (double v : values) acc += v - anchor;
    return anchor + acc / static_cast<double>(values.size());
}

std::string trim(std::string s) {
    const auto ws = " \t\r\n";
    s.erase(0, s.find_first_not_of(ws));
    s.erase(s.find_last_not_of(ws) + 1);
    return s;
}

}  // namespace

double mean(std::span<const double> values) {
    if (values.empty()) throw Error(Errc::EmptyGroup, "mean of an empty sample");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double sample_sd(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw Error(Errc::EmptyGroup, "percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0 || values[lo] == values[hi]) return values[lo];
    return values[lo] + frac * (values[hi] - values[lo]);
}

double student_t_two_sided_p(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    boost::math::students_t dist(df);
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

double normal_two_sided_p(double z) { return std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0))); }

ErrorTable compute_errors(const Manifest& ground_truth, const LandmarkSets& predictions) {
    ErrorTable table;
    for (const auto& rec : ground_truth.records) {
        auto pit = predictions.find(rec.id);
        for (const auto& gt : rec.landmarks) {
            if (!gt.visible) continue;
            const Landmark* pred = nullptr;
            if (pit != predictions.end()) {
                for (const auto& p : pit->second) {
                    if (p.name == gt.name && p.visible) pred = &p;
                }
            }
            if (!pred) {
                ++table.missing_predictions;
                continue;
            }
            const double px = std::hypot(pred->x - gt.x, pred->y - gt.y);
            table.rows.push_back({rec.id, rec.id, rec.source, gt.name, to_mm(px, rec.pixel_spacing), true});
        }
    }
    return table;
}

ErrorTable read_error_csv(const std::filesystem::path& path, const AliasTable& aliases) {
    std::istringstream in(io::read_file(path));
    ErrorTable table;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cols.push_back(trim(cell));
        if (!header_seen) {
            header_seen = true;
            if (cols.size() >= 3 && cols[0] == "image_id") continue;
        }
        if (cols.size() < 3) {
            throw Error(Errc::ParseError, path.string() + ":" + std::to_string(lineno) + ": expected 4 columns",
                        path.string());
        }
        ErrorRow row;
        row.image_id = cols[0];
        row.patient_id = cols[0];
        row.landmark = aliases.resolve(cols[1]);
        try {
            std::size_t used = 0;
            row.error = std::stod(cols[2], &used);
            if (used != cols[2].size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw Error(Errc::ParseError, path.string() + ":" + std::to_string(lineno) + ": bad error value",
                        path.string());
        }
        if (cols.size() >= 4) {
            const auto& v = cols[3];
            row.visible = !(v == "0" || v == "false" || v == "False");
        }
        if (row.visible && !(row.error >= 0.0)) {
            throw Error(Errc::ValidationError, path.string() + ":" + std::to_string(lineno) + ": negative error",
                        path.string());
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string write_error_csv(const ErrorTable& table) {
    std::ostringstream out;
    out << "image_id,landmark,error_mm,visible\n";
    char buf[64];
    for (const auto& r : table.rows) {
        std::snprintf(buf, sizeof buf, "%.6f", r.error);
        out << r.image_id << ',' << to_string(r.landmark) << ',' << buf << ',' << (r.visible ? 1 : 0) << '\n';
    }
    return out.str();
}

std::vector<double> visible_errors(const ErrorTable& table) {
    std::vector<double> out;
    for (const auto& r : table.rows) {
        if (r.visible) out.push_back(r.error);
    }
    return out;
}

double mre(const ErrorTable& table) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& r : table.rows) {
        if (!r.visible) continue;
        s += r.error;
        ++n;
    }
    if (n == 0) throw Error(Errc::EmptyGroup, "no visible errors to average");
    return s / static_cast<double>(n);
}

std::map<std::string, double> mre(const ErrorTable& table, Grouping grouping) {
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (const auto& r : table.rows) {
        if (!r.visible) continue;
        auto& [s, n] = acc[group_key(r, grouping)];
        s += r.error;
        ++n;
    }
    if (acc.empty()) throw Error(Errc::EmptyGroup, "no visible errors to average");
    std::map<std::string, double> out;
    for (const auto& [k, v] : acc) out[k] = v.first / static_cast<double>(v.second);
    return out;
}

double sdr(const ErrorTable& table, double threshold) {
    std::size_t hit = 0, n = 0;
    for (const auto& r : table.rows) {
        if (!r.visible) continue;
        ++n;
        if (r.error <= threshold) ++hit;
    }
    if (n == 0) throw Error(Errc::EmptyGroup, "no visible errors for SDR");
    return static_cast<double>(hit) / static_cast<double>(n);
}

std::map<std::string, double> sdr(const ErrorTable& table, double threshold, Grouping grouping) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> acc;
    for (const auto& r : table.rows) {
        if (!r.visible) continue;
        auto& [hit, n] = acc[group_key(r, grouping)];
        ++n;
        if (r.error <= threshold) ++hit;
    }
    if (acc.empty()) throw Error(Errc::EmptyGroup, "no visible errors for SDR");
    std::map<std::string, double> out;
    for (const auto& [k, v] : acc) out[k] = static_cast<double>(v.first) / static_cast<double>(v.second);
    return out;
}

Interval bootstrap_ci(std::span<const double> values, std::size_t resamples, double level, std::uint64_t seed) {
    if (values.size() < 2) throw Error(Errc::TooFewValues, "bootstrap needs at least two values");
    if (resamples < 100) throw Error(Errc::ValidationError, "bootstrap needs at least 100 resamples");
    if (!(level > 0.0 && level < 1.0)) throw Error(Errc::ValidationError, "confidence level must lie in (0, 1)");
    const std::size_t n = values.size();
    std::vector<double> means(resamples);
    std::vector<double> draw(n);
    for (std::size_t b = 0; b < resamples; ++b) {
        CounterRng rng(derive_key(seed, {0x626F6F74ULL, b}));
        for (std::size_t i = 0; i < n; ++i) draw[i] = values[rng.below(n)];
        means[b] = shifted_mean(draw);
    }
    const double tail = (1.0 - level) / 2.0;
    std::sort(means.begin(), means.end());
    return {percentile(means, tail), percentile(means, 1.0 - tail)};
}

TestResult paired_t(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "paired t-test");
    if (a.size() < 2) throw Error(Errc::TooFewValues, "paired t-test needs at least two pairs");
    const auto d = differences(a, b);
    const double m = mean(d);
    const double sd = sample_sd(d);
    if (!(sd > 0.0)) throw Error(Errc::ZeroVariance, "paired differences have zero variance");
    const auto n = static_cast<double>(d.size());
    TestResult r;
    r.method = "paired_t";
    r.n = d.size();
    r.df = n - 1.0;
    r.mean_difference = m;
    r.statistic = m / (sd / std::sqrt(n));
    r.p_value = student_t_two_sided_p(r.statistic, r.df);
    return r;
}

TestResult permutation_test(std::span<const double> a, std::span<const double> b, std::size_t permutations,
                            std::uint64_t seed) {
    require_same_length(a, b, "permutation test");
    if (a.empty()) throw Error(Errc::TooFewValues, "permutation test needs at least one pair");
    if (permutations == 0) throw Error(Errc::ValidationError, "permutation count must be positive");
    const auto d = differences(a, b);
    const std::size_t n = d.size();
    double observed = 0.0, scale = 0.0;
    for (double v : d) {
        observed += v;
        scale += std::abs(v);
    }
    const double obs_abs = std::abs(observed);
    // Sums of the same magnitudes in a different sign pattern can land an ulp
    // away from an exact tie.
    const double slack = 1e-12 * scale;

    auto flipped_sum = [&](auto&& sign_of) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += sign_of(i) ? -d[i] : d[i];
        return std::abs(s);
    };

    TestResult r;
    r.n = n;
    r.mean_difference = observed / static_cast<double>(n);
    r.statistic = obs_abs / static_cast<double>(n);
    r.seed = seed;

    if (n < 63 && (std::uint64_t{1} << n) <= permutations) {
        const std::uint64_t total = std::uint64_t{1} << n;
        std::uint64_t hits = 0;
        for (std::uint64_t pattern = 0; pattern < total; ++pattern) {
            if (flipped_sum([&](std::size_t i) { return ((pattern >> i) & 1U) != 0; }) >= obs_abs - slack) ++hits;
        }
        r.method = "sign_flip_exact";
        r.resamples = static_cast<std::size_t>(total);
        r.p_value = static_cast<double>(hits) / static_cast<double>(total);
        return r;
    }

    std::size_t hits = 0;
    std::vector<std::uint64_t> bits((n + 63) / 64);
    for (std::size_t p = 0; p < permutations; ++p) {
        CounterRng rng(derive_key(seed, {0x7065726DULL, p}));
        for (auto& word : bits) word = rng.next();
        if (flipped_sum([&](std::size_t i) { return ((bits[i / 64] >> (i % 64)) & 1U) != 0; }) >= obs_abs - slack) {
            ++hits;
        }
    }
    r.method = "sign_flip_monte_carlo";
    r.resamples = permutations;
    r.p_value = static_cast<double>(1 + hits) / static_cast<double>(permutations + 1);
    return r;
}

TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "Wilcoxon signed-rank test");
    std::vector<double> d;
    for (double v : differences(a, b)) {
        if (v != 0.0) d.push_back(v);
    }
    if (d.empty()) throw Error(Errc::AllZeroDifferences, "all paired differences are zero");
    const std::size_t n = d.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return std::abs(d[i]) < std::abs(d[j]); });
    // Ranks doubled so that averaged ties stay integral.
    std::vector<std::size_t> rank2(n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
        const std::size_t t = j - i + 1;
        for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = i + j + 2;  // 2 * ((i+1 + j+1) / 2)
        tie_term += static_cast<double>(t * t * t - t);
        i = j + 1;
    }
    std::size_t w2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] > 0.0) w2 += rank2[i];
    }

    TestResult r;
    r.n = n;
    r.statistic = static_cast<double>(w2) / 2.0;
    r.mean_difference = mean(differences(a, b));

    if (n <= 25) {
        // Null distribution of the doubled W+ by subset-sum counting.
        std::size_t max2 = 0;
        for (auto v : rank2) max2 += v;
        std::vector<double> ways(max2 + 1, 0.0);
        ways[0] = 1.0;
        for (auto v : rank2) {
            for (std::size_t s = max2; s >= v; --s) {
                ways[s] += ways[s - v];
                if (s == v) break;
            }
        }
        const double total = std::ldexp(1.0, static_cast<int>(n));
        double le = 0.0, ge = 0.0;
        for (std::size_t s = 0; s <= max2; ++s) {
            if (s <= w2) le += ways[s];
            if (s >= w2) ge += ways[s];
        }
        r.method = "wilcoxon_exact";
        r.p_value = std::min(1.0, 2.0 * std::min(le, ge) / total);
        return r;
    }

    const double nn = static_cast<double>(n);
    const double mu = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double dev = std::max(0.0, std::abs(r.statistic - mu) - 0.5);
    r.method = "wilcoxon_normal";
    r.p_value = var > 0.0 ? normal_two_sided_p(dev / std::sqrt(var)) : 1.0;
    return r;
}

double cohens_kappa(const Confusion& confusion) {
    const std::size_t k = confusion.size();
    double total = 0.0, diag = 0.0;
    std::vector<double> rows(k, 0.0), cols(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        if (confusion[i].size() != k) throw Error(Errc::ShapeMismatch, "confusion matrix must be square");
        for (std::size_t j = 0; j < k; ++j) {
            const auto c = static_cast<double>(confusion[i][j]);
            total += c;
            rows[i] += c;
            cols[j] += c;
            if (i == j) diag += c;
        }
    }
    if (!(total > 0.0)) throw Error(Errc::EmptyGroup, "confusion matrix is empty");
    const double po = diag / total;
    double pe = 0.0;
    for (std::size_t i = 0; i < k; ++i) pe += rows[i] * cols[i];
    pe /= total * total;
    if (pe >= 1.0) throw Error(Errc::DegenerateMarginals, "chance agreement is 1; kappa is undefined");
    return (po - pe) / (1.0 - pe);
}

namespace {

struct TwoWayAnova {
    double msr, msc, mse;
};

TwoWayAnova anova(std::span<const double> r1, std::span<const double> r2) {
    require_same_length(r1, r2, "ICC");
    const std::size_t n = r1.size();
    if (n < 2) throw Error(Errc::TooFewValues, "ICC needs at least two subjects");
    constexpr double k = 2.0;
    const auto nn = static_cast<double>(n);
    double grand = 0.0, c1 = 0.0, c2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        c1 += r1[i];
        c2 += r2[i];
    }
    grand = (c1 + c2) / (k * nn);
    c1 /= nn;
    c2 /= nn;
    double ssr = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double row = (r1[i] + r2[i]) / k;
        ssr += (row - grand) * (row - grand);
        sst += (r1[i] - grand) * (r1[i] - grand) + (r2[i] - grand) * (r2[i] - grand);
    }
    ssr *= k;
    const double ssc = nn * ((c1 - grand) * (c1 - grand) + (c2 - grand) * (c2 - grand));
    const double sse = std::max(0.0, sst - ssr - ssc);
    return {ssr / (nn - 1.0), ssc / (k - 1.0), sse / ((nn - 1.0) * (k - 1.0))};
}

}  // namespace

double icc_a1(std::span<const double> r1, std::span<const double> r2) {
    const auto a = anova(r1, r2);
    const double n = static_cast<double>(r1.size());
    constexpr double k = 2.0;
    const double denom = a.msr + (k - 1.0) * a.mse + (k / n) * (a.msc - a.mse);
    if (denom == 0.0) return 1.0;
    return (a.msr - a.mse) / denom;
}

double icc_c1(std::span<const double> r1, std::span<const double> r2) {
    const auto a = anova(r1, r2);
    const double denom = a.msr + a.mse;
    if (denom == 0.0) return 1.0;
    return (a.msr - a.mse) / denom;
}

BiasMae bias_mae(std::span<const double> pred, std::span<const double> gt) {
    require_same_length(pred, gt, "bias/MAE");
    if (pred.empty()) throw Error(Errc::TooFewValues, "bias/MAE needs at least one pair");
    std::vector<double> diff(pred.size()), absd(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        diff[i] = pred[i] - gt[i];
        absd[i] = std::abs(diff[i]);
    }
    return {mean(diff), sample_sd(diff), mean(absd), percentile(absd, 0.5)};
}

}  // namespace ceph::stats
