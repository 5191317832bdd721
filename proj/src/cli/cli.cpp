#include "ceph/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "ceph/anchors.hpp"
#include "ceph/cgt.hpp"
#include "ceph/clinical.hpp"
#include "ceph/contour_io.hpp"
#include "ceph/error.hpp"
#include "ceph/geometry.hpp"
#include "ceph/heatmaps.hpp"
#include "ceph/io.hpp"
#include "ceph/model.hpp"
#include "ceph/parallel.hpp"
#include "ceph/priors.hpp"
#include "ceph/provenance.hpp"
#include "ceph/sei.hpp"
#include "ceph/stats.hpp"
#include "ceph/zones.hpp"

namespace ceph::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = CEPHGEO_VERSION;

// Reports carry ten significant digits so that text output is stable.
double sig(double v) {
    if (!std::isfinite(v) || v == 0.0) return v;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::strtod(buf, nullptr);
}

std::string fixed6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

json opt_num(const std::optional<double>& v) { return v ? json(sig(*v)) : json(nullptr); }

struct Settings {
    std::optional<std::uint64_t> seed;
    std::size_t threads = 0;
    fs::path config_path;
    fs::path sigma_file;
    fs::path tolerance_file;
    fs::path alias_file;
    nlohmann::json config = nlohmann::json::object();
};

// Effective run settings after flags and config have been merged.
struct Context {
    std::optional<std::uint64_t> seed;
    std::size_t threads = 1;
    AliasTable aliases = AliasTable::builtin();
    SigmaTable sigmas;
    ToleranceTable tolerances;
    nlohmann::json config = nlohmann::json::object();
    json echo = json::object();  // settings embedded in outputs; never includes the thread count
    std::ostream* out = &std::cout;

    template <typename T>
    T cfg(const char* key, T fallback) const {
        if (auto it = config.find(key); it != config.end()) return it->get<T>();
        return fallback;
    }

    std::uint64_t require_seed(const char* what) const {
        if (!seed) throw CLI::ValidationError("--seed", std::string(what) + " requires an explicit --seed");
        return *seed;
    }
};

fs::path relative_to(const fs::path& base, const fs::path& p) {
    if (p.empty() || p.is_absolute()) return p;
    return base / p;
}

void load_tolerances(ToleranceTable& table, const fs::path& path) {
    try {
        const auto j = nlohmann::json::parse(io::read_file(path));
        for (const auto& [name, eps] : j.items()) table.set(parse_contour_class(name), eps.get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ParseError, std::string("tolerance file: ") + e.what(), path.string());
    }
}

Context make_context(const Settings& s) {
    Context ctx;
    fs::path base;
    if (!s.config_path.empty()) {
        try {
            ctx.config = nlohmann::json::parse(io::read_file(s.config_path));
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::ParseError, std::string("config: ") + e.what(), s.config_path.string());
        }
        if (!ctx.config.is_object()) throw Error(Errc::ParseError, "config must be a JSON object", s.config_path.string());
        base = s.config_path.parent_path();
    }
    ctx.seed = s.seed;
    if (!ctx.seed && ctx.config.contains("seed")) ctx.seed = ctx.config["seed"].get<std::uint64_t>();
    ctx.threads = s.threads ? s.threads : ctx.cfg<std::size_t>("threads", default_threads());
    if (ctx.threads == 0) ctx.threads = default_threads();

    auto pick = [&](const fs::path& flag, const char* key) {
        if (!flag.empty()) return flag;
        return relative_to(base, fs::path(ctx.cfg<std::string>(key, "")));
    };
    const auto alias_file = pick(s.alias_file, "alias_file");
    const auto sigma_file = pick(s.sigma_file, "sigma_file");
    const auto tolerance_file = pick(s.tolerance_file, "tolerance_file");
    if (!alias_file.empty()) {
        ctx.aliases.extend_from_file(alias_file);
        ctx.echo["alias_file_sha256"] = provenance::sha256_file(alias_file);
    }
    if (!sigma_file.empty()) {
        ctx.sigmas.override_from_file(sigma_file, ctx.aliases);
        ctx.echo["sigma_file_sha256"] = provenance::sha256_file(sigma_file);
    }
    if (!tolerance_file.empty()) {
        load_tolerances(ctx.tolerances, tolerance_file);
        ctx.echo["tolerance_file_sha256"] = provenance::sha256_file(tolerance_file);
    }
    if (!s.config_path.empty()) ctx.echo["config_sha256"] = provenance::sha256_file(s.config_path);
    if (ctx.seed) ctx.echo["seed"] = *ctx.seed;
    ctx.echo["tool_version"] = kToolVersion;
    return ctx;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_json(const fs::path& path, const json& j) { io::write_file_atomic(path, dump(j)); }

// Non-JSON outputs get a sidecar holding the settings that produced them.
void write_sidecar(const fs::path& path, const json& settings) {
    auto side = path;
    side += ".config.json";
    write_json(side, settings);
}

json landmark_json(const Landmark& l) {
    return {{"name", std::string(to_string(l.name))}, {"x", l.x}, {"y", l.y}, {"visible", l.visible}};
}

std::vector<double> parse_list(const std::string& raw) {
    std::vector<double> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw CLI::ValidationError("--thresholds", "not a number: " + item);
        }
    }
    return out;
}

std::vector<std::string> split_words(const std::string& raw) {
    std::vector<std::string> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Tensors are read from a single .cgt file or every .cgt in a directory.
std::vector<fs::path> tensor_files(const fs::path& path) {
    if (!fs::is_directory(path)) {
        if (!fs::exists(path)) throw Error(Errc::IoError, "no such file or directory: " + path.string(), path.string());
        return {path};
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path)) {
        if (e.is_regular_file() && e.path().extension() == ".cgt") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

Heatmap channel_heatmap(const cgt::Tensor& t, std::size_t c, LandmarkName name) {
    const auto ch = t.channel(c);
    return make_heatmap(std::vector<double>(ch.begin(), ch.end()), t.height, t.width, name);
}

// ---------------------------------------------------------------- import-isbi

struct ImportArgs {
    std::vector<std::string> annotations;
    std::string names;
    int width = 0;
    int height = 0;
    double spacing = 0.1;
    std::string source = "isbi";
    std::string split = "train";
    std::string out;
};

void cmd_import(const Context& ctx, const ImportArgs& a) {
    const auto names = load_name_list(a.names, ctx.aliases);
    Manifest m;
    m.seed = static_cast<std::int64_t>(ctx.seed.value_or(0));
    const auto split = parse_split(a.split);
    auto files = a.annotations;
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        auto rec = import_isbi(f, names, a.width, a.height, a.spacing, a.source);
        rec.split = split;
        m.records.push_back(std::move(rec));
    }
    validate(m);
    io::write_file_atomic(a.out, serialize_manifest(m));
    *ctx.out << dump({{"records", m.records.size()}, {"out", a.out}});
}

// ---------------------------------------------------------------------- zones

void cmd_zones_calibrate(const Context& ctx, const std::string& manifest, double margin, const std::string& out) {
    const auto m = load_manifest(manifest, ctx.aliases);
    const auto zones = calibrate(m, margin);
    io::write_file_atomic(out, serialize_zones(zones));
    const auto report = check_containment(m, zones);
    *ctx.out << dump({{"zones", zones.size()}, {"containment_rate", sig(report.rate())}, {"out", out}});
}

void cmd_zones_check(const Context& ctx, const std::string& manifest, const std::string& zones_path,
                     const std::string& out) {
    const auto m = load_manifest(manifest, ctx.aliases);
    const auto zones = load_zones(zones_path, ctx.aliases);
    const auto r = check_containment(m, zones);
    json violations = json::array();
    for (const auto& v : r.violations) {
        violations.push_back({{"image_id", v.image_id},
                              {"landmark", std::string(to_string(v.landmark))},
                              {"zone", std::string(to_string(v.zone))},
                              {"nx", sig(v.nx)},
                              {"ny", sig(v.ny)}});
    }
    json j{{"checked", r.checked}, {"contained", r.contained}, {"rate", sig(r.rate())}, {"violations", violations}};
    if (!out.empty()) write_json(out, j);
    *ctx.out << dump(j);
}

// ------------------------------------------------------------------- simplify

const ImageRecord& record_for(const Manifest& m, const std::string& id) {
    const auto* rec = m.find(id);
    if (!rec) throw Error(Errc::ValidationError, "contours reference unknown image id", id);
    return *rec;
}

std::map<std::string, std::string> simplify_all(const Context& ctx, const Manifest& m, const ContourSets& sets) {
    std::vector<std::pair<std::string, const std::vector<Contour>*>> items;
    for (const auto& [id, cs] : sets) items.emplace_back(id, &cs);
    std::vector<std::string> texts(items.size());
    parallel_for(items.size(), ctx.threads, [&](std::size_t i) {
        const auto& rec = record_for(m, items[i].first);
        std::vector<Contour> out;
        for (const auto& c : *items[i].second) out.push_back(simplify(c, ctx.tolerances, rec.pixel_spacing));
        texts[i] = serialize_contours(out);
    });
    std::map<std::string, std::string> result;
    for (std::size_t i = 0; i < items.size(); ++i) result[items[i].first + ".json"] = std::move(texts[i]);
    return result;
}

void cmd_simplify(const Context& ctx, const std::string& contours, const std::string& manifest, const std::string& out) {
    const auto m = load_manifest(manifest, ctx.aliases);
    const auto sets = load_contour_sets(contours);
    const auto files = simplify_all(ctx, m, sets);
    for (const auto& [name, text] : files) io::write_file_atomic(fs::path(out) / name, text);
    *ctx.out << dump({{"images", files.size()}, {"out", out}});
}

// ------------------------------------------------------------ extract-anchors

struct AnchorRun {
    LandmarkSets sets;
    json failures = json::array();
};

AnchorRun extract_anchors(const Context& ctx, const Manifest& m, const ContourSets& sets) {
    std::vector<std::pair<std::string, const std::vector<Contour>*>> items;
    for (const auto& [id, cs] : sets) items.emplace_back(id, &cs);
    std::vector<AnchorExtraction> results(items.size());
    parallel_for(items.size(), ctx.threads, [&](std::size_t i) {
        const auto& rec = record_for(m, items[i].first);
        results[i] = extract_all(to_contour_set(*items[i].second, rec), default_rule_catalog(), ctx.tolerances,
                                 rec.pixel_spacing);
    });
    AnchorRun run;
    for (std::size_t i = 0; i < items.size(); ++i) {
        auto& lms = run.sets[items[i].first];
        for (const auto& a : results[i].anchors) lms.push_back(a.landmark);
        for (const auto& f : results[i].failures) {
            run.failures.push_back({{"image_id", items[i].first},
                                    {"landmark", std::string(to_string(f.target))},
                                    {"error", std::string(errc_name(f.code))},
                                    {"message", f.message}});
        }
    }
    return run;
}

void cmd_extract(const Context& ctx, const std::string& contours, const std::string& manifest, const std::string& out) {
    const auto m = load_manifest(manifest, ctx.aliases);
    const auto run = extract_anchors(ctx, m, load_contour_sets(contours));
    io::write_file_atomic(out, serialize_landmark_sets(run.sets));
    *ctx.out << dump({{"images", run.sets.size()}, {"failures", run.failures}, {"out", out}});
}

// ----------------------------------------------------------------- gen-priors

struct PriorArgs {
    std::string manifest;
    std::string condition = "gt";
    std::string out;
    std::size_t resolution = kDefaultPriorResolution;
    std::string split;
};

std::vector<const ImageRecord*> select_records(const Manifest& m, const std::string& split) {
    if (!split.empty()) return m.split(parse_split(split));
    std::vector<const ImageRecord*> out;
    for (const auto& r : m.records) out.push_back(&r);
    return out;
}

// Returns file name -> encoded tensor bytes.
std::map<std::string, std::string> generate_priors(const Context& ctx, const Manifest& m, const PriorArgs& a) {
    PriorCondition cond;
    cond.variant = parse_prior_variant(a.condition);
    std::optional<PopulationStats> pop;
    if (cond.variant == PriorVariant::Random) cond.seed = ctx.require_seed("the random prior condition");
    if (cond.variant == PriorVariant::PopulationMean) {
        pop = population_stats(m);
        cond.population = &*pop;
    }
    const auto recs = select_records(m, a.split);
    std::vector<std::string> bytes(recs.size());
    parallel_for(recs.size(), ctx.threads, [&](std::size_t i) {
        const auto stack = make_condition_stack(cond, *recs[i], ctx.sigmas, a.resolution, a.resolution);
        bytes[i] = cgt::encode(to_tensor(stack));
    });
    std::map<std::string, std::string> out;
    for (std::size_t i = 0; i < recs.size(); ++i) out[recs[i]->id + ".cgt"] = std::move(bytes[i]);
    return out;
}

json prior_settings(const Context& ctx, const PriorArgs& a) {
    json s = ctx.echo;
    s["condition"] = std::string(to_string(parse_prior_variant(a.condition)));
    s["resolution"] = a.resolution;
    if (!a.split.empty()) s["split"] = a.split;
    json sig_table = json::object();
    for (auto name : all_landmarks()) {
        const auto& e = ctx.sigmas.at(name);
        sig_table[std::string(to_string(name))] = {{"tier", std::string(to_string(e.tier))}, {"sigma", e.sigma}};
    }
    s["sigmas"] = sig_table;
    return s;
}

void cmd_gen_priors(const Context& ctx, const PriorArgs& a) {
    const auto m = load_manifest(a.manifest, ctx.aliases);
    const auto files = generate_priors(ctx, m, a);
    for (const auto& [name, bytes] : files) io::write_file_atomic(fs::path(a.out) / name, bytes);
    write_json(fs::path(a.out) / "config.json", prior_settings(ctx, a));
    *ctx.out << dump({{"tensors", files.size()}, {"out", a.out}});
}

// --------------------------------------------------------------------- decode

struct DecodedImage {
    std::string id;
    std::vector<Landmark> landmarks;
    json detail = json::array();
};

DecodedImage decode_tensor(const cgt::Tensor& t, const std::string& id, const AliasTable& aliases,
                           const ImageRecord* record) {
    DecodedImage d;
    d.id = id;
    for (std::size_t c = 0; c < t.channels; ++c) {
        const auto name = aliases.resolve(t.channel_names[c]);
        Landmark lm{name, 0.0, 0.0, false};
        json info{{"name", std::string(to_string(name))}};
        const auto map = channel_heatmap(t, c, name);
        std::optional<DecodeResult> decoded;
        try {
            decoded = decode(map);
        } catch (const Error& e) {
            if (e.code() != Errc::AllZeroMap) throw;
        }
        if (decoded) {
            const auto& r = *decoded;
            lm.visible = true;
            lm.x = r.position.x;
            lm.y = r.position.y;
            if (record) {
                lm.x *= static_cast<double>(record->width) / static_cast<double>(t.width);
                lm.y *= static_cast<double>(record->height) / static_cast<double>(t.height);
            }
            const double s = effective_sigma(map);
            info["peak"] = sig(r.peak);
            info["refined"] = r.refined;
            info["sigma_hat"] = sig(s);
            info["tier"] = std::string(to_string(classify_confidence(s)));
        } else {
            info["error"] = std::string(errc_name(Errc::AllZeroMap));
        }
        d.landmarks.push_back(lm);
        d.detail.push_back(info);
    }
    return d;
}

json decoded_json(const std::vector<DecodedImage>& images, const json& settings) {
    json recs = json::array();
    for (const auto& d : images) {
        json lms = json::array();
        for (std::size_t i = 0; i < d.landmarks.size(); ++i) {
            auto j = landmark_json(d.landmarks[i]);
            for (const auto& [k, v] : d.detail[i].items()) {
                if (k != "name") j[k] = v;
            }
            lms.push_back(j);
        }
        recs.push_back({{"id", d.id}, {"landmarks", lms}});
    }
    return {{"config", settings}, {"records", recs}};
}

std::vector<DecodedImage> decode_all(const Context& ctx, const std::vector<std::pair<std::string, cgt::Tensor>>& tensors,
                                     const Manifest* manifest) {
    std::vector<DecodedImage> out(tensors.size());
    parallel_for(tensors.size(), ctx.threads, [&](std::size_t i) {
        const ImageRecord* rec = manifest ? manifest->find(tensors[i].first) : nullptr;
        if (manifest && !rec) throw Error(Errc::ValidationError, "tensor has no manifest record", tensors[i].first);
        out[i] = decode_tensor(tensors[i].second, tensors[i].first, ctx.aliases, rec);
    });
    return out;
}

void cmd_decode(const Context& ctx, const std::string& tensors, const std::string& manifest, const std::string& out) {
    std::optional<Manifest> m;
    if (!manifest.empty()) m = load_manifest(manifest, ctx.aliases);
    std::vector<std::pair<std::string, cgt::Tensor>> loaded;
    for (const auto& f : tensor_files(tensors)) loaded.emplace_back(f.stem().string(), cgt::read(f));
    const auto images = decode_all(ctx, loaded, m ? &*m : nullptr);
    json settings = ctx.echo;
    settings["units"] = m ? "image_px" : "heatmap_px";
    write_json(out, decoded_json(images, settings));
    *ctx.out << dump({{"images", images.size()}, {"out", out}});
}

// ------------------------------------------------------------------- ensemble

void cmd_ensemble(const Context& ctx, const std::vector<std::string>& inputs, const std::string& out) {
    std::vector<cgt::Tensor> ts;
    for (const auto& p : inputs) ts.push_back(cgt::read(p));
    const auto& first = ts.front();
    for (const auto& t : ts) {
        if (t.channels != first.channels || t.height != first.height || t.width != first.width ||
            t.channel_names != first.channel_names) {
            throw Error(Errc::ShapeMismatch, "ensemble inputs differ in shape or channel names");
        }
    }
    cgt::Tensor avg = first;
    for (std::size_t c = 0; c < first.channels; ++c) {
        const auto name = ctx.aliases.resolve(first.channel_names[c]);
        std::vector<Heatmap> maps;
        for (const auto& t : ts) maps.push_back(channel_heatmap(t, c, name));
        const auto mean = ensemble_average(maps);
        auto dst = avg.channel(c);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(mean.grid[i]);
    }
    cgt::write(out, avg);
    json settings = ctx.echo;
    settings["members"] = inputs.size();
    json hashes = json::array();
    for (const auto& p : inputs) hashes.push_back(provenance::sha256_file(p));
    settings["member_sha256"] = hashes;
    write_sidecar(out, settings);
    *ctx.out << dump({{"members", inputs.size()}, {"out", out}});
}

// ---------------------------------------------------------------- map-metrics

void cmd_map_metrics(const Context& ctx, const std::string& act, const std::string& zones_path,
                     const std::string& manifest, const std::string& out) {
    const auto m = load_manifest(manifest, ctx.aliases);
    const auto zones = load_zones(zones_path, ctx.aliases);
    std::ostringstream csv;
    csv << "image_id,landmark,zone,peak_to_gt_px,entropy_bits,in_roi_ratio,off_zone_ratio\n";
    std::size_t rows = 0;
    for (const auto& f : tensor_files(act)) {
        const auto id = f.stem().string();
        const auto* rec = m.find(id);
        if (!rec) throw Error(Errc::ValidationError, "activation tensor has no manifest record", id);
        const auto t = cgt::read(f);
        for (std::size_t c = 0; c < t.channels; ++c) {
            const auto name = ctx.aliases.resolve(t.channel_names[c]);
            const auto* gt = rec->find_visible(name);
            if (!gt) continue;
            const Point2 g{gt->x * static_cast<double>(t.width) / rec->width,
                           gt->y * static_cast<double>(t.height) / rec->height};
            const auto& zone = find_zone(zones, zone_of(name));
            const auto mask = rasterize(zone, t.height, t.width);
            const auto mm = map_metrics(channel_heatmap(t, c, name), g, mask);
            csv << id << ',' << to_string(name) << ',' << to_string(zone.zone) << ',' << fixed6(mm.peak_to_gt_px) << ','
                << fixed6(mm.entropy_bits) << ',' << fixed6(mm.in_roi_ratio) << ',' << fixed6(mm.off_zone_ratio) << '\n';
            ++rows;
        }
    }
    io::write_file_atomic(out, csv.str());
    write_sidecar(out, ctx.echo);
    *ctx.out << dump({{"rows", rows}, {"out", out}});
}

// -------------------------------------------------------------------- measure

struct MeasureArgs {
    std::string pred;
    std::string gt;
    std::string scheme;
    std::string out;
    std::optional<int> facing;
    bool impa_supplement = false;
};

void cmd_measure(const Context& ctx, const MeasureArgs& a) {
    const auto scheme = clinical::ThresholdScheme::by_name(
        !a.scheme.empty() ? a.scheme : ctx.cfg<std::string>("scheme", "steiner"));
    clinical::MeasureOptions opts;
    opts.facing = a.facing.value_or(ctx.cfg<int>("facing", 1));
    opts.impa_supplement = a.impa_supplement || ctx.cfg<bool>("impa_supplement", false);

    const auto pred = load_landmark_sets(a.pred, ctx.aliases);
    const auto gt = load_landmark_sets(a.gt, ctx.aliases);

    std::ostringstream csv;
    csv << "image_id";
    for (auto mm : clinical::kMeasurements) {
        const auto n = std::string(to_string(mm));
        csv << ',' << n << "_pred," << n << "_gt," << n << "_error";
    }
    csv << ",sagittal_pred,sagittal_gt,vertical_pred,vertical_gt,sagittal_boundary_pred,sagittal_boundary_gt,"
           "vertical_boundary_pred,vertical_boundary_gt\n";

    std::map<clinical::Measurement, std::pair<std::vector<double>, std::vector<double>>> pairs;
    std::vector<clinical::SagittalClass> sag_p, sag_g;
    std::vector<clinical::VerticalClass> ver_p, ver_g;
    std::size_t images = 0;
    auto cell = [](const std::optional<double>& v) { return v ? fixed6(*v) : std::string(); };
    auto flag = [](bool b) { return b ? "1" : "0"; };

    for (const auto& [id, gt_lms] : gt) {
        auto pit = pred.find(id);
        if (pit == pred.end()) continue;
        ++images;
        const auto mp = clinical::measure(pit->second, opts);
        const auto mg = clinical::measure(gt_lms, opts);
        csv << id;
        for (auto mm : clinical::kMeasurements) {
            const auto p = mp.get(mm);
            const auto g = mg.get(mm);
            std::optional<double> err;
            if (p && g) {
                err = *p - *g;
                pairs[mm].first.push_back(*p);
                pairs[mm].second.push_back(*g);
            }
            csv << ',' << cell(p) << ',' << cell(g) << ',' << cell(err);
        }
        std::optional<clinical::SagittalResult> sp, sg;
        std::optional<clinical::VerticalResult> vp, vg;
        if (mp.anb) sp = clinical::classify_sagittal(*mp.anb, scheme);
        if (mg.anb) sg = clinical::classify_sagittal(*mg.anb, scheme);
        if (mp.gogn_sn) vp = clinical::classify_vertical(*mp.gogn_sn, scheme);
        if (mg.gogn_sn) vg = clinical::classify_vertical(*mg.gogn_sn, scheme);
        csv << ',' << (sp ? to_string(sp->label) : "") << ',' << (sg ? to_string(sg->label) : "") << ','
            << (vp ? to_string(vp->label) : "") << ',' << (vg ? to_string(vg->label) : "") << ','
            << (sp ? flag(sp->near_boundary()) : "") << ',' << (sg ? flag(sg->near_boundary()) : "") << ','
            << (vp ? flag(vp->near_boundary()) : "") << ',' << (vg ? flag(vg->near_boundary()) : "") << '\n';
        if (sp && sg) {
            sag_p.push_back(sp->label);
            sag_g.push_back(sg->label);
        }
        if (vp && vg) {
            ver_p.push_back(vp->label);
            ver_g.push_back(vg->label);
        }
    }
    io::write_file_atomic(a.out, csv.str());
    json settings = ctx.echo;
    settings["scheme"] = scheme.name;
    settings["facing"] = opts.facing;
    settings["impa_supplement"] = opts.impa_supplement;
    write_sidecar(a.out, settings);

    json summary{{"images", images}, {"scheme", scheme.name}};
    json per = json::object();
    for (const auto& [mm, pg] : pairs) {
        json e{{"n", pg.first.size()}};
        const auto bm = stats::bias_mae(pg.first, pg.second);
        e["bias"] = sig(bm.bias);
        e["sd"] = sig(bm.sd);
        e["mae"] = sig(bm.mae);
        e["median_ae"] = sig(bm.median_ae);
        if (pg.first.size() >= 2) e["icc_a1"] = sig(stats::icc_a1(pg.first, pg.second));
        per[std::string(to_string(mm))] = e;
    }
    summary["measurements"] = per;
    auto agreement = [](const clinical::AgreementReport& r) {
        return json{{"n", r.n},
                    {"confusion", r.confusion},
                    {"kappa", opt_num(r.kappa)},
                    {"adjacent_only", r.adjacent_only},
                    {"extreme_reversals", r.extreme_reversals}};
    };
    if (!sag_p.empty()) summary["sagittal"] = agreement(clinical::agreement_report(sag_p, sag_g));
    if (!ver_p.empty()) summary["vertical"] = agreement(clinical::agreement_report(ver_p, ver_g));
    *ctx.out << dump(summary);
}

// ------------------------------------------------------------------- evaluate

struct EvalArgs {
    std::string pred;
    std::string gt;
    std::string thresholds = "2,2.5,3,4";
    std::size_t bootstrap = 0;
    double level = 0.95;
    std::string split;
    std::string out;
    std::string errors_out;
};

json evaluate_report(const Context& ctx, const Manifest& gt, const LandmarkSets& pred, const EvalArgs& a,
                     stats::ErrorTable* keep = nullptr) {
    Manifest scoped = gt;
    if (!a.split.empty()) {
        const auto which = parse_split(a.split);
        std::erase_if(scoped.records, [&](const ImageRecord& r) { return r.split != which; });
    }
    auto table = stats::compute_errors(scoped, pred);
    json r{{"unit", table.unit}, {"n", table.rows.size()}, {"missing_predictions", table.missing_predictions}};
    r["mre"] = sig(stats::mre(table));
    const auto errs = stats::visible_errors(table);
    r["sd"] = sig(stats::sample_sd(errs));
    if (a.bootstrap > 0) {
        const auto seed = ctx.require_seed("--bootstrap");
        const auto ci = stats::bootstrap_ci(errs, a.bootstrap, a.level, seed);
        r["mre_ci"] = {{"lo", sig(ci.lo)}, {"hi", sig(ci.hi)}, {"level", a.level}, {"resamples", a.bootstrap},
                       {"seed", seed}};
    }
    json sdr = json::object();
    for (double t : parse_list(a.thresholds)) sdr[fixed6(t)] = sig(stats::sdr(table, t));
    r["sdr"] = sdr;
    json per_lm = json::object();
    for (const auto& [k, v] : stats::mre(table, stats::Grouping::PerLandmark)) per_lm[k] = sig(v);
    r["mre_per_landmark"] = per_lm;
    json per_src = json::object();
    for (const auto& [k, v] : stats::mre(table, stats::Grouping::PerSource)) per_src[k] = sig(v);
    r["mre_per_source"] = per_src;
    if (keep) *keep = std::move(table);
    return r;
}

void cmd_evaluate(const Context& ctx, const EvalArgs& a) {
    const auto gt = load_manifest(a.gt, ctx.aliases);
    const auto pred = load_landmark_sets(a.pred, ctx.aliases);
    stats::ErrorTable table;
    json report = evaluate_report(ctx, gt, pred, a, &table);
    json settings = ctx.echo;
    settings["thresholds"] = a.thresholds;
    settings["bootstrap"] = a.bootstrap;
    if (!a.split.empty()) settings["split"] = a.split;
    json doc{{"config", settings}, {"report", report}};
    write_json(a.out, doc);
    if (!a.errors_out.empty()) {
        io::write_file_atomic(a.errors_out, stats::write_error_csv(table));
        write_sidecar(a.errors_out, settings);
    }
    *ctx.out << dump(report);
}

// -------------------------------------------------------------------- compare

struct CompareArgs {
    std::string a;
    std::string b;
    std::string tests = "t,perm,wilcoxon";
    std::size_t permutations = 10000;
    std::string level = "patient";
    std::string out;
};

json test_json(const stats::TestResult& r) {
    json j{{"method", r.method},       {"statistic", sig(r.statistic)}, {"p_value", sig(r.p_value)},
           {"mean_difference", sig(r.mean_difference)}, {"n", r.n}, {"sidedness", r.sidedness}};
    if (r.df > 0.0) j["df"] = r.df;
    if (r.resamples > 0) j["resamples"] = r.resamples;
    if (r.seed) j["seed"] = *r.seed;
    return j;
}

void cmd_compare(const Context& ctx, const CompareArgs& a) {
    const auto ta = stats::read_error_csv(a.a, ctx.aliases);
    const auto tb = stats::read_error_csv(a.b, ctx.aliases);
    std::map<std::pair<std::string, int>, double> eb;
    for (const auto& r : tb.rows) {
        if (r.visible) eb[{r.image_id, static_cast<int>(r.landmark)}] = r.error;
    }
    std::map<std::string, std::pair<double, double>> per_patient_sum;
    std::map<std::string, std::size_t> per_patient_n;
    std::vector<double> xa, xb;
    std::set<std::pair<std::string, int>> seen;
    for (const auto& r : ta.rows) {
        if (!r.visible) continue;
        const std::pair<std::string, int> key{r.image_id, static_cast<int>(r.landmark)};
        auto it = eb.find(key);
        if (it == eb.end() || !seen.insert(key).second) continue;
        if (a.level == "pair") {
            xa.push_back(r.error);
            xb.push_back(it->second);
        }
        auto& s = per_patient_sum[r.patient_id];
        s.first += r.error;
        s.second += it->second;
        ++per_patient_n[r.patient_id];
    }
    if (a.level == "patient") {
        for (const auto& [pid, s] : per_patient_sum) {
            const auto n = static_cast<double>(per_patient_n[pid]);
            xa.push_back(s.first / n);
            xb.push_back(s.second / n);
        }
    } else if (a.level != "pair") {
        throw CLI::ValidationError("--level", "must be 'patient' or 'pair'");
    }
    if (xa.empty()) throw Error(Errc::EmptyGroup, "no (image, landmark) pairs shared by both error tables");

    json results = json::object();
    for (const auto& t : split_words(a.tests)) {
        if (t == "t") {
            results["t"] = test_json(stats::paired_t(xa, xb));
        } else if (t == "perm") {
            results["perm"] = test_json(stats::permutation_test(xa, xb, a.permutations, ctx.require_seed("perm")));
        } else if (t == "wilcoxon") {
            results["wilcoxon"] = test_json(stats::wilcoxon_signed_rank(xa, xb));
        } else {
            throw CLI::ValidationError("--tests", "unknown test '" + t + "'");
        }
    }
    json settings = ctx.echo;
    settings["level"] = a.level;
    settings["permutations"] = a.permutations;
    settings["difference"] = "b - a";
    json doc{{"config", settings}, {"n_units", xa.size()}, {"tests", results}};
    write_json(a.out, doc);
    *ctx.out << dump(doc);
}

// ------------------------------------------------------------------------ sei

void cmd_sei(const Context& ctx, const std::string& manifest, const SeiParams& p, const std::string& out) {
    const auto m = load_manifest(manifest, ctx.aliases);
    const auto pts = mean_normalized_positions(m);
    const auto r = sei(pts, p);
    json doc{{"n_landmarks", r.n_landmarks}, {"h_grid", sig(r.h_grid)}, {"h_norm", sig(r.h_norm)},
             {"d_pair", sig(r.d_pair)},      {"z", r.z},                 {"z_ratio", sig(r.z_ratio)},
             {"sei", sig(r.sei)},
             {"params", {{"grid", p.grid}, {"radius", p.cluster_radius}, {"z_max", p.z_max}}},
             {"config", ctx.echo}};
    write_json(out, doc);
    *ctx.out << dump(doc);
}

// ------------------------------------------------------------------- pipeline

struct PipelineArgs {
    std::string manifest;
    std::string contours;
    std::string out;
    std::string condition = "gt";
    std::size_t resolution = kDefaultPriorResolution;
    std::string verify;
};

std::string tree_digest(const fs::path& p) {
    if (!fs::is_directory(p)) return provenance::sha256_file(p);
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::string acc;
    for (const auto& f : files) acc += fs::relative(f, p).generic_string() + '\0' + provenance::sha256_file(f) + '\n';
    return provenance::sha256_hex(acc);
}

void cmd_pipeline_verify(const Context& ctx, const fs::path& bundle) {
    const auto m = provenance::parse(io::read_file(bundle / "provenance.json"));
    const auto r = provenance::verify(bundle, m);
    json j{{"ok", r.ok}, {"mismatched", r.mismatched}, {"missing", r.missing}};
    if (!r.ok) {
        std::string what = "bundle outputs do not match provenance hashes:";
        for (const auto& f : r.mismatched) what += " " + f;
        for (const auto& f : r.missing) what += " " + f + "(missing)";
        throw Error(Errc::ProvenanceMismatch, what, (bundle / "provenance.json").string());
    }
    *ctx.out << dump(j);
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.code(), std::string("stage ") + name + ": " + e.what(), e.context());
    }
}

void cmd_pipeline(const Context& ctx, const PipelineArgs& a) {
    if (!a.verify.empty()) {
        cmd_pipeline_verify(ctx, a.verify);
        return;
    }
    if (a.manifest.empty() || a.contours.empty() || a.out.empty()) {
        throw CLI::ValidationError("pipeline", "--manifest, --contours and --out are required");
    }
    const fs::path bundle(a.out);
    std::map<std::string, std::string> files;  // bundle-relative path -> bytes

    const auto manifest = stage("load", [&] { return load_manifest(a.manifest, ctx.aliases); });
    const auto contours = stage("load", [&] { return load_contour_sets(a.contours); });

    for (auto& [name, text] : stage("simplify", [&] { return simplify_all(ctx, manifest, contours); })) {
        files["simplified/" + name] = std::move(text);
    }

    const auto anchors = stage("extract-anchors", [&] { return extract_anchors(ctx, manifest, contours); });
    files["anchors.json"] = serialize_landmark_sets(anchors.sets);

    PriorArgs pa;
    pa.condition = a.condition;
    pa.resolution = a.resolution;
    const auto priors = stage("gen-priors", [&] { return generate_priors(ctx, manifest, pa); });
    for (const auto& [name, bytes] : priors) files["priors/" + name] = bytes;

    const auto decoded = stage("decode", [&] {
        std::vector<std::pair<std::string, cgt::Tensor>> ts;
        for (const auto& [name, bytes] : priors) {
            ts.emplace_back(fs::path(name).stem().string(), cgt::decode(bytes, name));
        }
        return decode_all(ctx, ts, &manifest);
    });
    json settings = prior_settings(ctx, pa);
    files["decoded.json"] = dump(decoded_json(decoded, settings));

    json report{{"images", manifest.records.size()}, {"config", settings}};
    report["anchors"] = stage("evaluate", [&] {
        json j{{"failures", anchors.failures}};
        Manifest scoped = manifest;
        // Anchors cover only the contour-derived landmarks.
        for (auto& rec : scoped.records) {
            std::erase_if(rec.landmarks, [&](const Landmark& l) {
                auto it = anchors.sets.find(rec.id);
                if (it == anchors.sets.end()) return true;
                return std::none_of(it->second.begin(), it->second.end(),
                                    [&](const Landmark& p) { return p.name == l.name; });
            });
        }
        const auto table = stats::compute_errors(scoped, anchors.sets);
        j["n"] = table.rows.size();
        if (!table.rows.empty()) {
            j["mre_mm"] = sig(stats::mre(table));
            j["sdr_2mm"] = sig(stats::sdr(table, 2.0));
        }
        return j;
    });
    report["decode"] = stage("evaluate", [&] {
        LandmarkSets sets;
        for (const auto& d : decoded) sets[d.id] = d.landmarks;
        const auto table = stats::compute_errors(manifest, sets);
        json j{{"n", table.rows.size()}, {"missing", table.missing_predictions}};
        if (!table.rows.empty()) {
            const auto errs = stats::visible_errors(table);
            j["mre_mm"] = sig(stats::mre(table));
            j["max_mm"] = sig(*std::max_element(errs.begin(), errs.end()));
        }
        return j;
    });
    files["report.json"] = dump(report);

    provenance::Manifest prov;
    prov.tool_version = kToolVersion;
    prov.inputs["manifest"] = provenance::sha256_file(a.manifest);
    prov.inputs["contours"] = tree_digest(a.contours);
    for (const auto& [k, v] : ctx.echo.items()) {
        if (k != "tool_version") prov.config[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    prov.config["condition"] = std::string(to_string(parse_prior_variant(a.condition)));
    prov.config["resolution"] = std::to_string(a.resolution);
    for (const auto& [rel, bytes] : files) {
        io::write_file_atomic(bundle / rel, bytes);
        prov.outputs[rel] = provenance::sha256_hex(bytes);
    }
    io::write_file_atomic(bundle / "provenance.json", provenance::serialize(prov));
    *ctx.out << dump({{"bundle", a.out}, {"outputs", files.size()}, {"anchors", report["anchors"]},
                      {"decode", report["decode"]}});
}

json error_json(const std::string& code, const std::string& message, const std::string& path) {
    return {{"error", code}, {"message", message}, {"path", path.empty() ? json(nullptr) : json(path)}};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Deterministic cephalometric geometry toolkit", "cephgeo"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", kToolVersion);

    Settings s;
    app.add_option("--seed", s.seed, "Seed for randomized operations");
    app.add_option("--threads", s.threads, "Worker threads (default: logical cores)");
    app.add_option("--config", s.config_path, "JSON settings file")->check(CLI::ExistingFile);
    app.add_option("--sigma-file", s.sigma_file, "Per-landmark sigma overrides (JSON)");
    app.add_option("--tolerance-file", s.tolerance_file, "Per-class tolerance overrides in mm (JSON)");
    app.add_option("--aliases", s.alias_file, "Extra landmark name aliases (JSON)");

    std::function<void(const Context&)> action;

    ImportArgs imp;
    auto* c_imp = app.add_subcommand("import-isbi", "Build a manifest from ISBI-style annotation files");
    c_imp->add_option("annotations", imp.annotations, "Annotation files")->required();
    c_imp->add_option("--names", imp.names, "Landmark name per annotation line")->required();
    c_imp->add_option("--width", imp.width)->required();
    c_imp->add_option("--height", imp.height)->required();
    c_imp->add_option("--spacing", imp.spacing, "mm per pixel");
    c_imp->add_option("--source", imp.source);
    c_imp->add_option("--split", imp.split);
    c_imp->add_option("--out", imp.out)->required();
    c_imp->callback([&] { action = [&](const Context& c) { cmd_import(c, imp); }; });

    std::string z_manifest, z_zones, z_out;
    double z_margin = 0.02;
    auto* c_zones = app.add_subcommand("zones", "Zone boxes");
    c_zones->require_subcommand(1);
    auto* c_zcal = c_zones->add_subcommand("calibrate", "Fit zone boxes to a manifest");
    c_zcal->add_option("--manifest", z_manifest)->required();
    c_zcal->add_option("--margin", z_margin);
    c_zcal->add_option("--out", z_out)->required();
    c_zcal->callback([&] { action = [&](const Context& c) { cmd_zones_calibrate(c, z_manifest, z_margin, z_out); }; });
    auto* c_zchk = c_zones->add_subcommand("check", "Report landmark containment");
    c_zchk->add_option("--manifest", z_manifest)->required();
    c_zchk->add_option("--zones", z_zones)->required();
    c_zchk->add_option("--out", z_out);
    c_zchk->callback([&] { action = [&](const Context& c) { cmd_zones_check(c, z_manifest, z_zones, z_out); }; });

    std::string contours, manifest, out_path;
    auto* c_simp = app.add_subcommand("simplify", "Simplify contours with per-class tolerances");
    c_simp->add_option("--contours", contours, "Directory of <id>.json or one file keyed by id")->required();
    c_simp->add_option("--manifest", manifest)->required();
    c_simp->add_option("--out", out_path, "Output directory")->required();
    c_simp->callback([&] { action = [&](const Context& c) { cmd_simplify(c, contours, manifest, out_path); }; });

    auto* c_anc = app.add_subcommand("extract-anchors", "Extract anchor landmarks from contours");
    c_anc->add_option("--contours", contours)->required();
    c_anc->add_option("--manifest", manifest)->required();
    c_anc->add_option("--out", out_path)->required();
    c_anc->callback([&] { action = [&](const Context& c) { cmd_extract(c, contours, manifest, out_path); }; });

    PriorArgs pri;
    auto* c_pri = app.add_subcommand("gen-priors", "Write prior stacks as CGT tensors");
    c_pri->add_option("--manifest", pri.manifest)->required();
    c_pri->add_option("--condition", pri.condition, "gt|zero|popmean|random");
    c_pri->add_option("--out", pri.out, "Output directory")->required();
    c_pri->add_option("--resolution", pri.resolution);
    c_pri->add_option("--split", pri.split, "Only records of this split");
    c_pri->callback([&] { action = [&](const Context& c) { cmd_gen_priors(c, pri); }; });

    std::string tensors;
    auto* c_dec = app.add_subcommand("decode", "Decode heatmap tensors to coordinates");
    c_dec->add_option("--tensors", tensors, "A .cgt file or a directory of them")->required();
    c_dec->add_option("--manifest", manifest, "Rescale to image pixels using record sizes");
    c_dec->add_option("--out", out_path)->required();
    c_dec->callback([&] { action = [&](const Context& c) { cmd_decode(c, tensors, manifest, out_path); }; });

    std::vector<std::string> inputs;
    auto* c_ens = app.add_subcommand("ensemble", "Average heatmap tensors");
    c_ens->add_option("--inputs", inputs)->required()->expected(1, -1);
    c_ens->add_option("--out", out_path)->required();
    c_ens->callback([&] { action = [&](const Context& c) { cmd_ensemble(c, inputs, out_path); }; });

    std::string act, zones;
    auto* c_mm = app.add_subcommand("map-metrics", "Activation map metrics per landmark");
    c_mm->add_option("--act", act)->required();
    c_mm->add_option("--zones", zones)->required();
    c_mm->add_option("--manifest", manifest)->required();
    c_mm->add_option("--out", out_path)->required();
    c_mm->callback([&] { action = [&](const Context& c) { cmd_map_metrics(c, act, zones, manifest, out_path); }; });

    MeasureArgs mea;
    auto* c_mea = app.add_subcommand("measure", "Clinical angles and classification");
    c_mea->add_option("--pred", mea.pred)->required();
    c_mea->add_option("--gt", mea.gt)->required();
    c_mea->add_option("--scheme", mea.scheme, "steiner|ricketts|convention_1_4");
    c_mea->add_option("--facing", mea.facing, "+1 if the profile faces +x, -1 otherwise");
    c_mea->add_flag("--impa-supplement", mea.impa_supplement);
    c_mea->add_option("--out", mea.out)->required();
    c_mea->callback([&] { action = [&](const Context& c) { cmd_measure(c, mea); }; });

    EvalArgs ev;
    auto* c_ev = app.add_subcommand("evaluate", "MRE, SDR and bootstrap interval");
    c_ev->add_option("--pred", ev.pred)->required();
    c_ev->add_option("--gt", ev.gt)->required();
    c_ev->add_option("--thresholds", ev.thresholds, "Comma-separated mm thresholds");
    c_ev->add_option("--bootstrap", ev.bootstrap, "Resamples (0 disables)");
    c_ev->add_option("--level", ev.level);
    c_ev->add_option("--split", ev.split);
    c_ev->add_option("--out", ev.out)->required();
    c_ev->add_option("--errors-out", ev.errors_out, "Also write the error table as CSV");
    c_ev->callback([&] { action = [&](const Context& c) { cmd_evaluate(c, ev); }; });

    CompareArgs cmp;
    auto* c_cmp = app.add_subcommand("compare", "Paired tests between two error tables");
    c_cmp->add_option("--a", cmp.a)->required();
    c_cmp->add_option("--b", cmp.b)->required();
    c_cmp->add_option("--tests", cmp.tests, "Any of t,perm,wilcoxon");
    c_cmp->add_option("--permutations", cmp.permutations);
    c_cmp->add_option("--level", cmp.level, "patient|pair");
    c_cmp->add_option("--out", cmp.out)->required();
    c_cmp->callback([&] { action = [&](const Context& c) { cmd_compare(c, cmp); }; });

    SeiParams sp;
    std::string sei_out = "sei.json";
    auto* c_sei = app.add_subcommand("sei", "Spatial entropy index of mean landmark positions");
    c_sei->add_option("--manifest", manifest)->required();
    c_sei->add_option("--grid", sp.grid);
    c_sei->add_option("--radius", sp.cluster_radius);
    c_sei->add_option("--zmax", sp.z_max);
    c_sei->add_option("--out", sei_out);
    c_sei->callback([&] { action = [&](const Context& c) { cmd_sei(c, manifest, sp, sei_out); }; });

    PipelineArgs pip;
    auto* c_pip = app.add_subcommand("pipeline", "Simplify, extract anchors, build priors and decode");
    c_pip->add_option("--manifest", pip.manifest);
    c_pip->add_option("--contours", pip.contours);
    c_pip->add_option("--out", pip.out, "Bundle directory");
    c_pip->add_option("--condition", pip.condition);
    c_pip->add_option("--resolution", pip.resolution);
    c_pip->add_option("--verify", pip.verify, "Check an existing bundle against its provenance");
    c_pip->callback([&] { action = [&](const Context& c) { cmd_pipeline(c, pip); }; });

    std::vector<const char*> argv{"cephgeo"};
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion& e) {
        out << kToolVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        Context ctx = make_context(s);
        ctx.out = &out;
        if (action) action(ctx);
        return 0;
    } catch (const CLI::ValidationError& e) {
        err << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << error_json(std::string(errc_name(e.code())), e.what(), e.context()).dump() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        err << error_json("ParseError", e.what(), "").dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << error_json("InternalError", e.what(), "").dump() << "\n";
        return 1;
    }
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace ceph::cli
