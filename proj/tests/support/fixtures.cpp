#include "fixtures.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>

#include <nlohmann/json.hpp>

#include "bladerag/text_utils.hpp"
#include "bladerag/vlm_client.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace testsupport {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

const char* kDamageDoc =
    "Blade damage type descriptions\n"
    "Cracks: The obvious features for the cracks are that they are perpendicular to "
    "the length of the blade. Crack damage looks like linear fractures on the blade "
    "surface, often appearing as fine lines that can range from microscopic to "
    "several centimeters in length. They typically start at stress concentration "
    "points and may be straight, branched, or web-like. Fresh cracks appear as "
    "sharp, clean breaks with defined edges, while older cracks may have "
    "discoloration around the edges. They can be superficial (affecting only the "
    "outer layer) or structural (penetrating deeper into the blade material).\n"
    "\n"
    "Corrosion and erosion: Corrosion shows as discolored, rough patches where the "
    "protective coating has broken down, often with a brown or rust-colored tint "
    "around the affected area. Leading-edge erosion appears as a band of worn, "
    "pitted material along the edge that faces the wind, progressing from dull "
    "paint to exposed laminate. Surface peeling shows sheets of coating lifting "
    "away from the underlying composite.\n"
    "\n"
    "Ice and lightning: Ice accumulation appears as uneven, jagged white or "
    "translucent buildup along the blade edges, thickest near the tip. Lightning "
    "strike damage shows scorched, blackened areas around an impact point, "
    "sometimes with burst or delaminated laminate and burn marks radiating "
    "outward. Snow cover appears as smooth white patches that follow gravity "
    "rather than the blade profile.\n";

const char* kTurbineDoc =
    "Wind turbine blade construction\n"
    "Wind turbine blades are typically made of composite materials, primarily "
    "fiberglass reinforced polyester or epoxy, and sometimes carbon fiber for "
    "larger blades. A load-bearing spar or spar caps run the length of the blade. "
    "Leading and trailing edge reinforcements protect the profile. The outer shell "
    "or skin is made of composite materials with a protective coating and paint to "
    "shield against environmental elements; healthy blades are painted white. The "
    "root section is reinforced with metal for connection to the hub. There is "
    "usually a seam line on the back side of the blade, along the length "
    "direction, but it is not damage. Vortex generators appear as small fin rows "
    "on the suction side and are a normal feature, not missing material.\n";

const char* kMaintenanceDoc =
    "Maintenance log severity levels\n"
    "Level 1 (Minor): Superficial damage that does not affect structural integrity "
    "or performance. Examples include minor surface erosion, small scratches, or "
    "minor coating damage. Monitoring recommended.\n"
    "Level 2 (Low): Early-stage damage that may progress if not addressed but does "
    "not present immediate concern. Examples include small cracks less than 10cm, "
    "early stage leading edge erosion, or limited surface peeling. Scheduled "
    "repair recommended within 3-6 months.\n"
    "Level 3 (Moderate): Damage that affects aerodynamic performance or is likely "
    "to grow under continued load. Examples include cracks longer than 10cm, "
    "coating loss over a wide band, or ice accumulation along the edge. Repair "
    "recommended within 1 month.\n"
    "Level 4 (High): Damage that compromises a load path or exposes laminate. "
    "Examples include deep cracks near the root, wide delamination, or burn marks "
    "from a lightning strike. Removal from service pending repair.\n"
    "Level 5 (Severe): Damage that threatens blade loss. Examples include "
    "through-thickness fracture, large burned-out sections, or structural "
    "delamination across the spar. Immediate shutdown required.\n";

struct FixtureImage {
    const char* id;
    const char* description;
    const char* capture;
    std::vector<std::string> labels;
};

const std::vector<FixtureImage>& fixture_images() {
    static const std::vector<FixtureImage> images = {
        {"img_h5",
         "The image was captured at night with poor visibility. One wind turbine "
         "blade is visible and appears healthy, with nothing abnormal on the surface.",
         "night, poor visibility",
         {}},
        {"img_h10",
         "The image was captured at dusk with low ambient light. It shows a single "
         "wind turbine blade; a small area of visible damage can be seen near the "
         "tip on the leading edge.",
         "dusk, low light",
         {}},
        {"img_h13",
         "The image was captured during clear daytime conditions. Three wind "
         "turbine blades are visible and all appear healthy and undamaged.",
         "sunny daytime",
         {}},
        {"img_h14",
         "The image was captured during daytime with scattered clouds. One healthy "
         "wind turbine blade is visible with clean white paint and an intact surface.",
         "daytime, scattered clouds",
         {}},
        {"img_h15",
         "The image was captured during cloudy daytime conditions with flat light. "
         "Two wind turbine blades are visible and show nothing unusual.",
         "cloudy daytime",
         {}},
        {"img_crk2-3",
         "The image was captured during daytime with clear blue-sky conditions. It "
         "shows three wind turbine blades with a visible crack at the end of the "
         "bottom right blade. The crack is oriented perpendicular to the "
         "longitudinal edge of the blade, which may indicate structural stress damage.",
         "daytime, clear blue sky",
         {"Crack"}},
        {"img_pel2",
         "The image was captured in the afternoon under hazy light. It shows a "
         "blade section with surface peeling: sheets of coating are lifting away "
         "near the trailing edge, exposing dull laminate.",
         "afternoon, hazy",
         {"Surface Peeling"}},
    };
    return images;
}

} // namespace

fs::path make_temp_dir(const std::string& hint) {
    static std::atomic<std::uint64_t> counter{0};
    auto now = std::chrono::steady_clock::now().time_since_epoch().count();
    fs::path dir = fs::temp_directory_path() /
                   ("bladerag_" + hint + "_" + std::to_string(now) + "_" +
                    std::to_string(counter.fetch_add(1)));
    fs::create_directories(dir);
    return dir;
}

std::string synth_image_bytes(const std::string& key, std::size_t size) {
    std::uint64_t state = 1469598103934665603ULL;
    for (unsigned char c : key) state = (state ^ c) * 1099511628211ULL;
    std::string bytes;
    bytes.reserve(size);
    while (bytes.size() < size) {
        std::uint64_t word = splitmix64(state);
        for (int i = 0; i < 8 && bytes.size() < size; ++i)
            bytes.push_back(static_cast<char>((word >> (8 * i)) & 0xFF));
    }
    return bytes;
}

std::string sample_response(const std::string& name) {
    return bladerag::text::read_file(std::string(BLADERAG_FIXTURES_DIR) +
                                     "/vlm_responses/" + name + ".response.txt");
}

void write_fixture_kb(const fs::path& kb_dir) {
    namespace btext = bladerag::text;
    btext::write_file((kb_dir / "docs" / "blade_damage_types.txt").string(), kDamageDoc);
    btext::write_file((kb_dir / "docs" / "turbine_features.txt").string(), kTurbineDoc);
    btext::write_file((kb_dir / "docs" / "maintenance_logs.txt").string(),
                      kMaintenanceDoc);

    json meta = json::array();
    for (const FixtureImage& img : fixture_images()) {
        std::string rel = std::string("images/") + img.id + ".png";
        btext::write_file((kb_dir / rel).string(), synth_image_bytes(img.id));
        json entry{{"id", img.id},
                   {"description", img.description},
                   {"image_path", rel},
                   {"capture_conditions", img.capture}};
        if (!img.labels.empty()) entry["damage_labels"] = img.labels;
        meta.push_back(std::move(entry));
    }
    btext::write_file((kb_dir / "images.meta.json").string(), meta.dump(2) + "\n");
}

EvalFixture write_eval_fixture(const fs::path& root) {
    namespace btext = bladerag::text;
    EvalFixture fixture;
    fixture.root = root;
    fixture.images_dir = root / "images";
    fixture.replay_dir = root / "replay";
    fixture.manifest_path = root / "ground_truth.jsonl";
    fixture.image_keys = {"img01", "img02", "img03", "img04", "img05"};

    struct Row {
        const char* key;
        const char* response;
        double latency;
        json labels;
        const char* group;
    };
    // img02 is a healthy blade the model flags (false alarm); img03 is a
    // cracked blade the model misses. 2 TP + 1 TN + 1 FP + 1 FN.
    const std::vector<Row> rows = {
        {"img01", "healthy_single_blade", 21.93, json::array(), "Healthy"},
        {"img02", "crack_low_light", 10.40, json::array(), "Healthy"},
        {"img03", "healthy_single_blade", 22.10, json::array({"Crack"}), "Structural"},
        {"img04", "corrosion_cracks", 18.70,
         json::array({"Surface Peeling", "Corrosion", "Rust", "Erosion", "Crack"}),
         "Structural"},
        {"img05", "ice_accumulation", 25.30, json::array({"Ice", "Snow"}),
         "Environmental"},
    };

    bladerag::ReplayStore store(fixture.replay_dir.string());
    std::string manifest;
    for (const Row& row : rows) {
        btext::write_file((fixture.images_dir / (std::string(row.key) + ".png")).string(),
                          synth_image_bytes(row.key));
        store.store(row.key, sample_response(row.response), row.latency);
        json line{{"image", "images/" + std::string(row.key) + ".png"},
                  {"labels", row.labels},
                  {"group", row.group}};
        manifest += line.dump() + "\n";
    }
    btext::write_file(fixture.manifest_path.string(), manifest);
    return fixture;
}

} // namespace testsupport
