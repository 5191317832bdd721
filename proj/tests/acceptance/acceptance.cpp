// Acceptance run: one line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "../oracles.hpp"
#include "../synth.hpp"
#include "ceph/anchors.hpp"
#include "ceph/cli.hpp"
#include "ceph/clinical.hpp"
#include "ceph/error.hpp"
#include "ceph/heatmaps.hpp"
#include "ceph/io.hpp"
#include "ceph/priors.hpp"
#include "ceph/sei.hpp"
#include "ceph/stats.hpp"

using namespace ceph;
namespace fs = std::filesystem;

namespace {

const fs::path kData = CEPH_TEST_DATA;

struct Outcome {
    bool ok = true;
    std::string detail;
};

class Checker {
public:
    void expect(bool cond, const std::string& what) {
        if (!cond) {
            out_.ok = false;
            if (!out_.detail.empty()) out_.detail += "; ";
            out_.detail += "FAILED " + what;
        }
    }
    void note(const std::string& s) {
        if (!out_.detail.empty()) out_.detail += "; ";
        out_.detail += s;
    }
    Outcome result() const { return out_; }

private:
    Outcome out_;
};

std::string fmt(double v, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

// ---------------------------------------------------------------- criterion 1

Outcome sei_table() {
    Checker c;
    struct Row {
        const char* domain;
        double h_norm, d_pair;
        int z;
        double worked;     // four-decimal arithmetic check
        double reported;   // three-decimal table entry
    };
    const Row rows[] = {
        {"hand", 0.751, 0.304, 18, 0.2283, 0.229},
        {"ceph", 0.607, 0.197, 9, 0.1076, 0.108},
        {"csxa", 0.540, 0.201, 7, 0.0760, 0.076},
        {"echo", 0.320, 0.152, 4, 0.0195, 0.020},
    };
    for (const auto& r : rows) {
        const double s = sei_composite(r.h_norm, r.d_pair, r.z, 10.0);
        c.expect(std::abs(s - r.worked) <= 0.0005, std::string(r.domain) + " " + fmt(s) + " vs " + fmt(r.worked));
        c.note(std::string(r.domain) + "=" + fmt(s, 4) + " (table " + fmt(r.reported, 3) + ", |d|=" +
               fmt(std::abs(s - r.reported), 2) + ")");
    }
    return c.result();
}

// ---------------------------------------------------------------- criterion 2

Outcome sei_components() {
    Checker c;
    std::vector<Point2> grid;
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) grid.push_back({(i + 0.5) / 8.0, (j + 0.5) / 8.0});
    }
    const auto h = grid_entropy(grid, 8);
    c.expect(h.bits == 6.0, "H_grid " + fmt(h.bits));
    c.expect(h.normalized == 1.0, "H_norm " + fmt(h.normalized));
    const std::vector<Point2> two{{0, 0}, {1, 1}};
    const double d = pairwise_distance(two);
    c.expect(d == 1.0, "D_pair " + fmt(d));
    c.note("H_grid=" + fmt(h.bits) + " H_norm=" + fmt(h.normalized) + " D_pair=" + fmt(d));
    return c.result();
}

// ---------------------------------------------------------------- criterion 3

Outcome fold_statistics() {
    Checker c;
    const std::vector<double> with{1.261, 1.252, 1.316, 1.263, 1.278};
    const std::vector<double> without{1.543, 1.410, 1.502, 1.543, 1.494};
    const auto r = stats::paired_t(with, without);
    int wins = 0;
    for (std::size_t i = 0; i < with.size(); ++i) wins += with[i] < without[i] ? 1 : 0;
    c.expect(std::abs(r.mean_difference - 0.224) <= 0.001, "mean improvement " + fmt(r.mean_difference));
    c.expect(r.p_value < 0.005, "p " + fmt(r.p_value));
    c.expect(wins == 5, "wins " + std::to_string(wins));
    c.note("mean=" + fmt(r.mean_difference, 4) + " t=" + fmt(r.statistic, 4) + " p=" + fmt(r.p_value, 3) +
           " wins=" + std::to_string(wins) + "/5");
    return c.result();
}

// ---------------------------------------------------------------- criterion 4

Outcome permutation_contract() {
    Checker c;
    const auto base = oracle::random_vector(151, 11, 1.0, 2.0);
    const auto noise = oracle::random_vector(151, 12, 0.0, 0.01);
    std::vector<double> shifted(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) shifted[i] = base[i] + 0.5 + noise[i];
    const auto big = stats::permutation_test(base, shifted, 10000, 42);
    c.expect(big.p_value == 1.0 / 10001.0, "shifted p " + fmt(big.p_value));
    const auto same = stats::permutation_test(base, base, 10000, 42);
    c.expect(same.p_value == 1.0, "identical p " + fmt(same.p_value));
    c.note("shifted p=" + fmt(big.p_value) + " identical p=" + fmt(same.p_value));
    return c.result();
}

// ---------------------------------------------------------------- criterion 5

// Simplified-chain arc fractions, computed directly.
std::vector<double> fractions(const std::vector<Point2>& v) {
    std::vector<double> s(v.size(), 0.0);
    for (std::size_t i = 1; i < v.size(); ++i) s[i] = s[i - 1] + oracle::dist({v[i - 1].x, v[i - 1].y}, {v[i].x, v[i].y});
    for (auto& x : s) x /= s.back();
    return s;
}

Outcome anchor_properties() {
    Checker c;
    const ToleranceTable tol;
    const double spacing = 0.1;
    std::mt19937 g(2024);
    std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> off(-500.0, 500.0);
    std::size_t checked = 0, empty = 0, equiv_bad = 0, dp_bad = 0, window_bad = 0;
    for (const auto& rule : default_rule_catalog()) {
        for (int k = 0; k < 500; ++k) {
            const auto contour = synth::for_rule(g, rule);
            const double th = ang(g);
            const Point2 t{off(g), off(g)};
            const auto moved = synth::transformed(contour, th, t);

            // An empty window is a legitimate outcome; it must then be empty
            // for the moved contour too.
            auto attempt = [&](const Contour& cc) -> std::optional<AnchorResult> {
                try {
                    return extract_anchor(cc, rule, tol, spacing);
                } catch (const Error& e) {
                    if (e.code() != Errc::EmptyWindow) throw;
                    return std::nullopt;
                }
            };
            const auto r0 = attempt(contour);
            const auto rm = attempt(moved);
            ++checked;
            if (!r0) {
                ++empty;
                if (rm) ++equiv_bad;
                continue;
            }
            const auto& r = *r0;

            // (a) rigid equivariance
            if (!rm || rm->source_index != r.source_index) ++equiv_bad;

            // (b) every removed vertex lies within epsilon of its spanning segment
            const double eps = epsilon_px(tol, rule.contour_class, spacing);
            const auto keep = simplify_indices(contour, eps);
            for (std::size_t s = 0; s + 1 < keep.size(); ++s) {
                const auto& a = contour.vertices[keep[s]];
                const auto& b = contour.vertices[keep[s + 1]];
                for (std::size_t i = keep[s] + 1; i < keep[s + 1]; ++i) {
                    const auto& p = contour.vertices[i];
                    if (oracle::seg_dist({p.x, p.y}, {a.x, a.y}, {b.x, b.y}) > eps) ++dp_bad;
                }
            }

            // (c) window membership on the simplified chain
            if (rule.kind != AnchorRuleKind::Endpoint) {
                std::vector<Point2> chain;
                for (auto i : keep) chain.push_back(contour.vertices[i]);
                const auto f = fractions(chain);
                const double fr = f[r.simplified_index];
                if (fr < rule.f_min || fr > rule.f_max) ++window_bad;
                if (keep[r.simplified_index] != r.source_index) ++window_bad;
            }
        }
    }
    c.expect(equiv_bad == 0, "equivariance violations " + std::to_string(equiv_bad));
    c.expect(dp_bad == 0, "deviation-bound violations " + std::to_string(dp_bad));
    c.expect(window_bad == 0, "window violations " + std::to_string(window_bad));
    c.note(std::to_string(checked) + " contours over " + std::to_string(default_rule_catalog().size()) + " rules, " +
           std::to_string(empty) + " empty windows");
    return c.result();
}

// ---------------------------------------------------------------- criterion 6

Outcome prior_contract() {
    Checker c;
    std::mt19937 g(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::size_t pass = 0, total = 0;
    double worst = 0.0;
    const double sigmas[] = {5.0, 12.0, 20.0};
    for (int k = 0; k < 1000; ++k) {
        const double sigma = sigmas[k % 3];
        const std::size_t h = 160, w = 176;
        const Point2 centre{60.0 + 56.0 * u(g), 50.0 + 60.0 * u(g)};
        const auto map = make_heatmap(gaussian_map(centre, sigma, h, w), h, w, LandmarkName::Sella);
        const auto d = decode(map);
        const double err = std::max(std::abs(d.position.x - centre.x), std::abs(d.position.y - centre.y));
        worst = std::max(worst, err);
        pass += err <= 0.05 ? 1 : 0;
        ++total;
    }
    c.expect(pass == total, std::to_string(pass) + "/" + std::to_string(total) + " round-trips within 0.05 px");

    const auto m = load_manifest(kData / "manifest.json");
    const auto pop = population_stats(m);
    const SigmaTable sig;
    PriorCondition cond{PriorVariant::PopulationMean, std::nullopt, &pop};
    const auto first = make_condition_stack(cond, m.records.front(), sig, 64, 64);
    bool identical = true;
    for (const auto& r : m.records) identical = identical && make_condition_stack(cond, r, sig, 64, 64) == first;
    c.expect(identical, "population-mean stacks differ across images");
    c.note(std::to_string(pass) + "/" + std::to_string(total) + " max err=" + fmt(worst, 3) + " px; popmean stacks " +
           (identical ? "identical" : "differ") + " over " + std::to_string(m.records.size()) + " images");
    return c.result();
}

// ---------------------------------------------------------------- criterion 7

double kappa_oracle(const stats::Confusion& m) {
    const std::size_t k = m.size();
    double n = 0, agree = 0;
    std::vector<double> rows(k, 0), cols(k, 0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            n += m[i][j];
            rows[i] += m[i][j];
            cols[j] += m[i][j];
        }
        agree += m[i][i];
    }
    double pe = 0;
    for (std::size_t i = 0; i < k; ++i) pe += (rows[i] / n) * (cols[i] / n);
    return (agree / n - pe) / (1 - pe);
}

// ICC(A,1) from two-way ANOVA mean squares, written out longhand.
double icc_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double grand = 0;
    for (std::size_t i = 0; i < x.size(); ++i) grand += x[i] + y[i];
    grand /= 2 * n;
    double ssr = 0, sse_tot = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double m = 0.5 * (x[i] + y[i]);
        ssr += 2 * (m - grand) * (m - grand);
        sse_tot += (x[i] - grand) * (x[i] - grand) + (y[i] - grand) * (y[i] - grand);
    }
    const double mx = oracle::mean(x), my = oracle::mean(y);
    const double ssc = n * ((mx - grand) * (mx - grand) + (my - grand) * (my - grand));
    const double sse = sse_tot - ssr - ssc;
    const double msr = ssr / (n - 1), msc = ssc, mse = sse / (n - 1);
    return (msr - mse) / (msr + mse + 2.0 / n * (msc - mse));
}

Outcome clinical_contract() {
    using namespace clinical;
    Checker c;
    const auto st = ThresholdScheme::steiner();
    const auto ri = ThresholdScheme::ricketts();
    std::vector<double> differ;
    std::vector<SagittalClass> labels;
    for (int i = 0; i <= 24; ++i) {
        const double anb = -4.0 + 0.5 * i;
        const auto a = classify_sagittal(anb, st).label;
        const auto b = classify_sagittal(anb, ri).label;
        if (a != b) differ.push_back(anb);
        labels.push_back(a);
        // Closed middle bands: Steiner I = [0, 4], Ricketts I = [2, 5].
        const bool expected = (anb >= 0.0 && anb < 2.0) || (anb > 4.0 && anb <= 5.0);
        c.expect((a != b) == expected, "unexpected label agreement state at ANB " + fmt(anb));
        if (anb > 0.0 && anb < 2.0) c.expect(a == SagittalClass::I && b == SagittalClass::III, "(0,2) labels");
        if (anb > 4.0 && anb < 5.0) c.expect(a == SagittalClass::II && b == SagittalClass::I, "(4,5) labels");
    }
    std::string set;
    for (double v : differ) set += (set.empty() ? "" : ",") + fmt(v);
    c.note("differ at {" + set + "}");

    const auto same = agreement_report(labels, labels);
    c.expect(same.kappa && *same.kappa == 1.0, "identity kappa");
    c.expect(same.extreme_reversals == 0, "identity reversals");

    std::mt19937 g(99);
    std::uniform_int_distribution<int> cell(0, 40);
    double worst_k = 0, worst_icc = 0;
    for (int t = 0; t < 200; ++t) {
        stats::Confusion m(3, std::vector<std::size_t>(3));
        for (auto& row : m) {
            for (auto& v : row) v = static_cast<std::size_t>(cell(g));
        }
        worst_k = std::max(worst_k, std::abs(stats::cohens_kappa(m) - kappa_oracle(m)));
        const auto x = oracle::random_vector(30, 1000 + t, 20, 40);
        const auto e = oracle::random_vector(30, 5000 + t, -2, 3);
        std::vector<double> y(30);
        for (std::size_t i = 0; i < 30; ++i) y[i] = x[i] + e[i];
        worst_icc = std::max(worst_icc, std::abs(stats::icc_a1(x, y) - icc_oracle(x, y)));
    }
    c.expect(worst_k <= 1e-9, "kappa oracle gap " + fmt(worst_k));
    c.expect(worst_icc <= 1e-9, "ICC oracle gap " + fmt(worst_icc));
    c.note("kappa gap=" + fmt(worst_k, 2) + " ICC gap=" + fmt(worst_icc, 2));
    return c.result();
}

// ---------------------------------------------------------------- criterion 8

Outcome evaluation_harness() {
    Checker c;
    const auto errs = oracle::random_vector(3263, 31, 0.0, 5.0);
    stats::ErrorTable t;
    double sum = 0;
    std::size_t n = 0, hit2 = 0;
    for (std::size_t i = 0; i < errs.size(); ++i) {
        stats::ErrorRow r;
        r.image_id = "p" + std::to_string(i / 25);
        r.patient_id = r.image_id;
        r.landmark = landmark_at(i % kLandmarkCount);
        r.error = errs[i];
        r.visible = i % 11 != 3;
        if (r.visible) {
            sum += r.error;
            ++n;
            hit2 += r.error <= 2.0 ? 1 : 0;
        }
        t.rows.push_back(r);
    }
    c.expect(stats::mre(t) == sum / static_cast<double>(n), "MRE");
    c.expect(stats::sdr(t, 2.0) == static_cast<double>(hit2) / static_cast<double>(n), "SDR@2");

    const std::vector<double> konst(40, 1.5);
    const auto kci = stats::bootstrap_ci(konst, 10000, 0.95, 5);
    c.expect(kci.lo == 1.5 && kci.hi == 1.5, "constant bootstrap not degenerate");

    stats::ErrorTable b;
    for (double e : {1.9, 2.0, 2.1}) b.rows.push_back({"x", "x", "", LandmarkName::Sella, e, true});
    c.expect(stats::sdr(b, 2.0) == 2.0 / 3.0, "SDR boundary");

    const auto vis = stats::visible_errors(t);
    const auto t0 = std::chrono::steady_clock::now();
    const auto ci = stats::bootstrap_ci(vis, 10000, 0.95, 5);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.expect(ci.lo < sum / n && ci.hi > sum / n, "CI does not bracket the mean");
    c.expect(secs < 10.0, "B=10000 took " + fmt(secs) + " s");
    c.note("n=" + std::to_string(n) + " MRE=" + fmt(sum / n) + " CI=[" + fmt(ci.lo) + ", " + fmt(ci.hi) + "] in " +
           fmt(secs, 3) + " s");
    return c.result();
}

// ---------------------------------------------------------------- criterion 9

Outcome tier_monotonicity() {
    Checker c;
    const double sigmas[] = {2.0, 6.0, 10.0};
    const ConfidenceTier want[] = {ConfidenceTier::High, ConfidenceTier::Medium, ConfidenceTier::Low};
    double prev = -1.0;
    std::string s;
    for (int i = 0; i < 3; ++i) {
        const auto map = make_heatmap(gaussian_map({64.3, 63.8}, sigmas[i], 128, 128), 128, 128, LandmarkName::Sella);
        const double est = effective_sigma(map);
        const auto tier = classify_confidence(est);
        c.expect(tier == want[i], "sigma " + fmt(sigmas[i]) + " tier " + std::string(to_string(tier)));
        c.expect(est > prev, "sigma_hat not increasing at " + fmt(sigmas[i]));
        prev = est;
        s += (s.empty() ? "" : " ") + fmt(sigmas[i]) + "->" + fmt(est, 4) + "/" + std::string(to_string(tier));
    }
    c.note(s);
    return c.result();
}

// --------------------------------------------------------------- criterion 10

bool same_tree(const fs::path& a, const fs::path& b, std::size_t& files) {
    std::vector<fs::path> fa, fb;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
    }
    for (const auto& e : fs::recursive_directory_iterator(b)) {
        if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
    }
    std::sort(fa.begin(), fa.end());
    std::sort(fb.begin(), fb.end());
    files = fa.size();
    if (fa != fb) return false;
    for (const auto& f : fa) {
        if (io::read_file(a / f) != io::read_file(b / f)) return false;
    }
    return true;
}

Outcome pipeline_determinism() {
    Checker c;
    const auto root = fs::temp_directory_path() / "cephgeo_acceptance";
    fs::remove_all(root);
    auto run = [&](const std::string& name, std::size_t threads) {
        std::ostringstream o, e;
        const int code = cli::run({"--threads", std::to_string(threads), "pipeline", "--manifest",
                                   (kData / "manifest.json").string(), "--contours", (kData / "contours").string(),
                                   "--out", (root / name).string()},
                                  o, e);
        c.expect(code == 0, name + " exit " + std::to_string(code) + " " + e.str());
    };
    const std::size_t many = std::max<std::size_t>(4, std::thread::hardware_concurrency());
    run("run1", 1);
    run("run2", 1);
    run("runN", many);
    std::size_t files = 0;
    c.expect(same_tree(root / "run1", root / "run2", files), "two runs differ");
    c.expect(same_tree(root / "run1", root / "runN", files), "1 vs " + std::to_string(many) + " threads differ");
    c.note(std::to_string(files) + " files identical across 2 runs and 1 vs " + std::to_string(many) + " threads");
    return c.result();
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> fn;
    };
    const std::vector<Criterion> all{
        {1, "SEI composite from reference component triples", 1, sei_table},
        {2, "SEI components from coordinates", 1, sei_components},
        {3, "five-fold statistics", 1, fold_statistics},
        {4, "permutation test contract", 5, permutation_contract},
        {5, "anchor extraction property suite", 30, anchor_properties},
        {6, "Gaussian prior contract", 10, prior_contract},
        {7, "clinical classification contract", 5, clinical_contract},
        {8, "evaluation harness oracle equivalence", 10, evaluation_harness},
        {9, "uncertainty tier monotonicity", 5, tier_monotonicity},
        {10, "pipeline determinism", 300, pipeline_determinism},
    };
    int failed = 0;
    for (const auto& cr : all) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = cr.fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > cr.budget_s) {
            o.ok = false;
            o.detail += "; over time budget " + fmt(cr.budget_s) + " s";
        }
        std::printf("[%s] %2d %-45s %7.3f s  %s\n", o.ok ? "PASS" : "FAIL", cr.id, cr.name, secs, o.detail.c_str());
        failed += o.ok ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
    return failed == 0 ? 0 : 1;
}
