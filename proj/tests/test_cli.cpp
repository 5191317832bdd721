#include <filesystem>
#include <sstream>

#include "ceph/cli.hpp"
#include "ceph/io.hpp"
#include "ceph/model.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace ceph;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kData = CEPH_TEST_DATA;

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args) {
    std::ostringstream o, e;
    const int c = cli::run(args, o, e);
    return {c, o.str(), e.str()};
}

fs::path scratch(const std::string& name) {
    const auto d = fs::temp_directory_path() / "ceph_test_cli" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string read(const fs::path& p) { return io::read_file(p); }

// Every landmark of the toy manifest shifted by (dx, dy) pixels.
fs::path shifted_predictions(const fs::path& dir, double dx, double dy, const std::string& name) {
    const auto m = load_manifest(kData / "manifest.json");
    LandmarkSets sets;
    for (const auto& r : m.records) {
        auto lms = r.landmarks;
        std::size_t k = 0;
        for (auto& l : lms) {
            l.x += dx * (1.0 + 0.1 * static_cast<double>(k % 5));
            l.y += dy;
            ++k;
        }
        sets[r.id] = lms;
    }
    const auto p = dir / name;
    io::write_file_atomic(p, serialize_landmark_sets(sets));
    return p;
}

bool same_tree(const fs::path& a, const fs::path& b) {
    std::vector<fs::path> fa, fb;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
    }
    for (const auto& e : fs::recursive_directory_iterator(b)) {
        if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
    }
    std::sort(fa.begin(), fa.end());
    std::sort(fb.begin(), fb.end());
    if (fa != fb) return false;
    for (const auto& f : fa) {
        if (read(a / f) != read(b / f)) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("exit codes") {
    const auto d = scratch("codes");
    CHECK(invoke({"sei", "--manifest", (kData / "manifest.json").string(), "--out", (d / "s.json").string()}).code == 0);
    CHECK(json::parse(read(d / "s.json")).contains("sei"));

    const auto missing = invoke({"sei", "--manifest", (d / "absent.json").string()});
    CHECK(missing.code == 1);
    const auto err = json::parse(missing.err);
    CHECK(err["error"] == "IoError");
    CHECK(err["path"].get<std::string>().find("absent.json") != std::string::npos);

    CHECK(invoke({"frobnicate"}).code == 2);
    CHECK(invoke({}).code == 2);
    CHECK(invoke({"gen-priors", "--manifest", (kData / "manifest.json").string(), "--condition", "random", "--out",
               (d / "p").string()})
              .code == 2);
    CHECK(invoke({"--version"}).code == 0);
}

TEST_CASE("zones, simplify, anchors, priors, decode, ensemble, map-metrics") {
    const auto d = scratch("stages");
    const auto man = (kData / "manifest.json").string();
    const auto con = (kData / "contours").string();

    REQUIRE(invoke({"zones", "calibrate", "--manifest", man, "--out", (d / "zones.json").string()}).code == 0);
    const auto chk = invoke({"zones", "check", "--manifest", man, "--zones", (d / "zones.json").string()});
    REQUIRE(chk.code == 0);
    CHECK(json::parse(chk.out)["rate"] == 1.0);

    REQUIRE(invoke({"simplify", "--contours", con, "--manifest", man, "--out", (d / "simp").string()}).code == 0);
    CHECK(fs::exists(d / "simp" / "toy001.json"));

    REQUIRE(invoke({"extract-anchors", "--contours", con, "--manifest", man, "--out", (d / "anchors.json").string()})
                .code == 0);
    const auto anchors = load_landmark_sets(d / "anchors.json");
    CHECK(anchors.size() == 3);

    REQUIRE(invoke({"--seed", "5", "gen-priors", "--manifest", man, "--condition", "gt", "--resolution", "64", "--out",
                 (d / "pri").string()})
                .code == 0);
    CHECK(fs::exists(d / "pri" / "toy002.cgt"));
    REQUIRE(invoke({"--seed", "5", "gen-priors", "--manifest", man, "--condition", "random", "--resolution", "64",
                 "--out", (d / "rnd").string()})
                .code == 0);

    REQUIRE(invoke({"decode", "--tensors", (d / "pri").string(), "--manifest", man, "--out", (d / "dec.json").string()})
                .code == 0);
    CHECK(json::parse(read(d / "dec.json")).dump().find("sigma_hat") != std::string::npos);

    REQUIRE(invoke({"ensemble", "--inputs", (d / "pri" / "toy001.cgt").string(), (d / "rnd" / "toy001.cgt").string(),
                 "--out", (d / "ens.cgt").string()})
                .code == 0);
    CHECK(fs::exists(d / "ens.cgt"));
    CHECK(invoke({"ensemble", "--inputs", (d / "pri" / "toy001.cgt").string(), (d / "absent.cgt").string(), "--out",
               (d / "bad.cgt").string()})
              .code == 1);

    REQUIRE(invoke({"map-metrics", "--act", (d / "pri").string(), "--zones", (d / "zones.json").string(), "--manifest",
                 man, "--out", (d / "mm.csv").string()})
                .code == 0);
    const auto csv = read(d / "mm.csv");
    CHECK(csv.rfind("image_id,landmark,zone,peak_to_gt_px,entropy_bits,in_roi_ratio,off_zone_ratio", 0) == 0);
}

TEST_CASE("measure, evaluate and compare on perturbed predictions") {
    const auto d = scratch("eval");
    const auto man = (kData / "manifest.json").string();
    const auto p1 = shifted_predictions(d, 6.0, -4.0, "p1.json").string();
    const auto p2 = shifted_predictions(d, 12.0, 9.0, "p2.json").string();

    const auto mea = invoke({"measure", "--pred", p1, "--gt", man, "--scheme", "ricketts", "--out",
                          (d / "m.csv").string()});
    REQUIRE(mea.code == 0);
    CHECK(json::parse(mea.out).contains("sagittal"));
    CHECK(fs::exists(d / "m.csv"));

    const auto ev = invoke({"--seed", "1", "evaluate", "--pred", p1, "--gt", man, "--bootstrap", "200", "--out",
                         (d / "e1.json").string(), "--errors-out", (d / "e1.csv").string()});
    REQUIRE(ev.code == 0);
    const auto rep = json::parse(ev.out);
    CHECK(rep["mre"].get<double>() > 0.0);
    CHECK(rep["mre_ci"]["lo"].get<double>() <= rep["mre"].get<double>());
    CHECK(invoke({"evaluate", "--pred", p1, "--gt", man, "--bootstrap", "200", "--out", (d / "x.json").string()}).code ==
          2);
    REQUIRE(invoke({"evaluate", "--pred", p2, "--gt", man, "--out", (d / "e2.json").string(), "--errors-out",
                 (d / "e2.csv").string()})
                .code == 0);

    const auto cmp = invoke({"--seed", "3", "compare", "--a", (d / "e1.csv").string(), "--b", (d / "e2.csv").string(),
                          "--level", "pair", "--permutations", "500", "--out", (d / "c.json").string()});
    REQUIRE(cmp.code == 0);
    const auto c = json::parse(cmp.out);
    CHECK(c["tests"]["t"]["mean_difference"].get<double>() > 0.0);
    CHECK(c["tests"]["perm"]["p_value"].get<double>() == doctest::Approx(1.0 / 501.0));
    CHECK(c["tests"].contains("wilcoxon"));
}

TEST_CASE("pipeline is deterministic and verifiable") {
    const auto d = scratch("pipe");
    const auto man = (kData / "manifest.json").string();
    const auto con = (kData / "contours").string();
    auto pipe = [&](const std::string& out, const std::string& threads) {
        return invoke({"--threads", threads, "pipeline", "--manifest", man, "--contours", con, "--resolution", "64",
                    "--out", (d / out).string()});
    };
    REQUIRE(pipe("a", "1").code == 0);
    REQUIRE(pipe("b", "4").code == 0);
    CHECK(same_tree(d / "a", d / "b"));

    const auto report = json::parse(read(d / "a" / "report.json"));
    CHECK(report["anchors"]["mre_mm"].get<double>() < 0.05);

    CHECK(invoke({"pipeline", "--verify", (d / "a").string()}).code == 0);
    io::write_file_atomic(d / "b" / "anchors.json", "{}");
    const auto bad = invoke({"pipeline", "--verify", (d / "b").string()});
    CHECK(bad.code == 1);
    CHECK(json::parse(bad.err)["error"] == "ProvenanceMismatch");
}
