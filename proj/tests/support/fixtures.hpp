#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace testsupport {

/// Fresh unique directory under the system temp root.
std::filesystem::path make_temp_dir(const std::string& hint);

/// Deterministic pseudo-image bytes derived from `key`; distinct keys give
/// distinct byte streams.
std::string synth_image_bytes(const std::string& key, std::size_t size = 256);

/// Reads one of the committed sample VLM responses by name
/// (e.g. "healthy_single_blade").
std::string sample_response(const std::string& name);

/// Writes the raw fixture knowledge base (three documents, six reference
/// images with descriptions, no manifest yet) into `kb_dir`.
void write_fixture_kb(const std::filesystem::path& kb_dir);

/// A full batch-evaluation fixture: five inspection images, a ground-truth
/// manifest (JSON lines) and a replay store wired so the batch scores
/// 2 TP, 1 FP, 1 TN, 1 FN (one miss plus one false alarm).
struct EvalFixture {
    std::filesystem::path root;
    std::filesystem::path images_dir;
    std::filesystem::path replay_dir;
    std::filesystem::path manifest_path;
    std::vector<std::string> image_keys;
};

EvalFixture write_eval_fixture(const std::filesystem::path& root);

} // namespace testsupport
