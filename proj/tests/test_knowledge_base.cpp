#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>

#include "bladerag/errors.hpp"
#include "bladerag/knowledge_base.hpp"
#include "bladerag/text_utils.hpp"
#include "support/fixtures.hpp"

using namespace bladerag;
namespace fs = std::filesystem;

namespace {

DocumentSource doc(const std::string& id, const std::string& body,
                   DocKind kind = DocKind::DamageDescriptions) {
    return {id, "Title of " + id, body, kind};
}

// Relative path -> file bytes for every regular file under root.
std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        files[fs::relative(entry.path(), root).string()] =
            text::read_file(entry.path().string());
    }
    return files;
}

} // namespace

TEST_CASE("add_document chunks and returns ids in order") {
    KnowledgeBase kb;
    auto ids = kb.add_document(doc("manual", std::string(2500, 'x')));
    REQUIRE(ids.size() == 3);
    CHECK(ids[0] == "manual_chunk_0");
    CHECK(ids[2] == "manual_chunk_2");
    CHECK(kb.document_count() == 1);
    CHECK(kb.chunk_count() == 3);
    CHECK(kb.find_chunk("manual_chunk_1") != nullptr);
}

TEST_CASE("duplicate and empty documents are rejected with the offending id") {
    KnowledgeBase kb;
    kb.add_document(doc("guide", "some text"));
    CHECK_THROWS_WITH_AS(kb.add_document(doc("guide", "other text")),
                         "duplicate document id: guide", KnowledgeBaseError);
    CHECK_THROWS_AS(kb.add_document(doc("empty", "")), KnowledgeBaseError);
}

TEST_CASE("reference images derive a retrievable metadata document") {
    auto dir = testsupport::make_temp_dir("kb_img");
    text::write_file((dir / "crack_photo.png").string(),
                     testsupport::synth_image_bytes("crack_photo"));

    KnowledgeBase kb;
    ImageEntry entry;
    entry.id = "img_crk1";
    entry.description = "Night shot of a cracked blade tip.";
    entry.image_locator = (dir / "crack_photo.png").string();
    entry.damage_labels = {"Crack"};

    CHECK(kb.add_reference_image(entry) == "img_crk1");
    CHECK(kb.image_count() == 1);
    CHECK(kb.document_count() == 1);

    const Chunk* chunk = kb.find_chunk("img_crk1_chunk_0");
    REQUIRE(chunk != nullptr);
    CHECK(chunk->text == entry.description);
    const DocumentSource* derived = kb.find_document("img_crk1");
    REQUIRE(derived != nullptr);
    CHECK(derived->kind == DocKind::ImageMetadataText);
    CHECK(kb.image_bytes("img_crk1").has_value());

    SUBCASE("duplicate image id") {
        CHECK_THROWS_AS(kb.add_reference_image(entry), KnowledgeBaseError);
    }
    SUBCASE("unreadable locator") {
        ImageEntry missing = entry;
        missing.id = "img_missing";
        missing.image_locator = (dir / "nope.png").string();
        CHECK_THROWS_AS(kb.add_reference_image(missing), KnowledgeBaseError);
    }
    SUBCASE("empty description") {
        ImageEntry blank = entry;
        blank.id = "img_blank";
        blank.description.clear();
        CHECK_THROWS_AS(kb.add_reference_image(blank), KnowledgeBaseError);
    }
}

TEST_CASE("URL-backed images are stored without local bytes") {
    KnowledgeBase kb;
    ImageEntry entry;
    entry.id = "img_remote";
    entry.description = "Hosted reference photo of an eroded edge.";
    entry.image_locator = "https://example.com/blades/erosion.jpg";
    kb.add_reference_image(entry);
    CHECK(!kb.image_bytes("img_remote").has_value());
    CHECK(kb.find_image("img_remote")->image_locator == entry.image_locator);
}

TEST_CASE("empty knowledge base round-trips") {
    auto dir = testsupport::make_temp_dir("kb_empty");
    KnowledgeBase kb;
    kb.save(dir.string());
    KnowledgeBase loaded = KnowledgeBase::load(dir.string());
    CHECK(loaded == kb);
    CHECK(loaded.document_count() == 0);
    CHECK(loaded.image_count() == 0);
}

TEST_CASE("save/load round-trip is lossless and re-persists byte-identically") {
    auto dir = testsupport::make_temp_dir("kb_roundtrip");
    auto img_dir = testsupport::make_temp_dir("kb_roundtrip_src");
    for (const char* name : {"one", "two"})
        text::write_file((img_dir / (std::string(name) + ".png")).string(),
                         testsupport::synth_image_bytes(name));

    KnowledgeBase kb;
    kb.add_document(doc("damage_types", std::string(1500, 'd') + ". tail"));
    kb.add_document(doc("turbine_info", "Blades are painted white.",
                        DocKind::TurbineFeatures));
    ImageEntry img1{"img_one", "First reference image.",
                    (img_dir / "one.png").string(), {"Crack"}, "night"};
    kb.add_reference_image(img1);
    kb.add_document(doc("logs", "Level 1 (Minor): monitoring.",
                        DocKind::MaintenanceLogs));
    ImageEntry img2{"img_two", "Second reference image.",
                    (img_dir / "two.png").string(), {}, ""};
    kb.add_reference_image(img2);

    fs::path first = dir / "first";
    kb.save(first.string());
    KnowledgeBase loaded = KnowledgeBase::load(first.string());
    CHECK(loaded == kb);

    fs::path second = dir / "second";
    loaded.save(second.string());
    CHECK(snapshot(first) == snapshot(second));
}

TEST_CASE("fixture knowledge base reloads field by field") {
    auto dir = testsupport::make_temp_dir("kb_fixture");
    testsupport::write_fixture_kb(dir);

    KnowledgeBase kb = KnowledgeBase::load(dir.string()); // raw ingest
    kb.save(dir.string());                                // now manifested
    KnowledgeBase reloaded = KnowledgeBase::load(dir.string());

    // Field-by-field diff, independent of operator==.
    auto docs_a = kb.documents();
    auto docs_b = reloaded.documents();
    REQUIRE(docs_a.size() == docs_b.size());
    for (std::size_t i = 0; i < docs_a.size(); ++i) {
        CAPTURE(docs_a[i].id);
        CHECK(docs_a[i].id == docs_b[i].id);
        CHECK(docs_a[i].title == docs_b[i].title);
        CHECK(docs_a[i].body == docs_b[i].body);
        CHECK(docs_a[i].kind == docs_b[i].kind);
    }
    auto chunks_a = kb.chunks();
    auto chunks_b = reloaded.chunks();
    REQUIRE(chunks_a.size() == chunks_b.size());
    for (std::size_t i = 0; i < chunks_a.size(); ++i) {
        CHECK(chunks_a[i].id == chunks_b[i].id);
        CHECK(chunks_a[i].doc_id == chunks_b[i].doc_id);
        CHECK(chunks_a[i].index == chunks_b[i].index);
        CHECK(chunks_a[i].text == chunks_b[i].text);
        CHECK(chunks_a[i].overlap == chunks_b[i].overlap);
    }
    auto images_a = kb.images();
    auto images_b = reloaded.images();
    REQUIRE(images_a.size() == images_b.size());
    for (std::size_t i = 0; i < images_a.size(); ++i) {
        CHECK(images_a[i].id == images_b[i].id);
        CHECK(images_a[i].description == images_b[i].description);
        CHECK(images_a[i].image_locator == images_b[i].image_locator);
        CHECK(images_a[i].damage_labels == images_b[i].damage_labels);
        CHECK(images_a[i].capture_conditions == images_b[i].capture_conditions);
        CHECK(kb.image_bytes(images_a[i].id) == reloaded.image_bytes(images_b[i].id));
    }
    CHECK(kb == reloaded);

    // The raw directory had no manifest, so documents arrive in sorted stem
    // order with kinds inferred from the stems.
    CHECK(docs_a[0].id == "blade_damage_types");
    CHECK(docs_a[0].kind == DocKind::DamageDescriptions);
    CHECK(docs_a[1].id == "maintenance_logs");
    CHECK(docs_a[1].kind == DocKind::MaintenanceLogs);
    CHECK(docs_a[2].id == "turbine_features");
    CHECK(docs_a[2].kind == DocKind::TurbineFeatures);
}

TEST_CASE("schema version mismatches are refused") {
    auto dir = testsupport::make_temp_dir("kb_schema");
    KnowledgeBase kb;
    kb.add_document(doc("a", "body"));
    kb.save(dir.string());

    std::string manifest = text::read_file((dir / "kb.manifest.json").string());
    auto pos = manifest.find("\"schema_version\": 1");
    REQUIRE(pos != std::string::npos);
    manifest.replace(pos, 19, "\"schema_version\": 99");
    text::write_file((dir / "kb.manifest.json").string(), manifest);

    CHECK_THROWS_WITH_AS(KnowledgeBase::load(dir.string()),
                         "knowledge-base schema version mismatch: expected 1, found 99",
                         KnowledgeBaseError);
}

TEST_CASE("per-document chunking overrides survive persistence") {
    auto dir = testsupport::make_temp_dir("kb_override");
    KnowledgeBase kb;
    ChunkingConfig tight;
    tight.chunk_size = 100;
    tight.chunk_overlap = 10;
    kb.add_document(doc("fine", std::string(350, 'f')), tight);
    kb.add_document(doc("coarse", std::string(350, 'c')));
    CHECK(kb.find_chunk("fine_chunk_3") != nullptr);
    CHECK(kb.find_chunk("coarse_chunk_1") == nullptr);

    kb.save(dir.string());
    KnowledgeBase loaded = KnowledgeBase::load(dir.string());
    CHECK(loaded == kb);
}
