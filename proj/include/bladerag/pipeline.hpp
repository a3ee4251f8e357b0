#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bladerag/embedding.hpp"
#include "bladerag/evaluation.hpp"
#include "bladerag/extraction.hpp"
#include "bladerag/knowledge_base.hpp"
#include "bladerag/prompting.hpp"
#include "bladerag/retrieval.hpp"
#include "bladerag/vector_index.hpp"
#include "bladerag/vlm_client.hpp"

namespace bladerag {

struct RetrievalDefaults {
    std::size_t top_k = 5;
    std::size_t top_n = 3;
    std::string query = kDefaultQuery;
};

/// Everything one deployment needs, loadable from a single JSON document.
/// Secrets never live here; they come from environment variables named in
/// the embedded configs.
struct PipelineConfig {
    std::string kb_dir = "kb";
    std::string text_index_path = "text.idx";
    std::string image_index_path = "image.idx";
    EmbeddingProviderConfig embedding;
    VlmConfig vlm;
    RetrievalDefaults retrieval;
    ChunkingConfig chunking;
    bool rag_enabled = true;

    static PipelineConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    static PipelineConfig load_file(const std::string& path);
};

/// Per-invocation overrides coming from CLI flags.
struct RunOptions {
    std::optional<std::string> query;
    std::optional<std::size_t> top_k;
    std::optional<std::size_t> top_n;
    std::optional<std::string> dump_prompt_path;
    bool no_rag = false;
    std::optional<std::string> replay_dir;
    std::optional<std::string> record_dir;
};

struct IngestSummary {
    std::size_t documents = 0;
    std::size_t chunks = 0;
    std::size_t images = 0;
};

/// Normalizes a knowledge-base directory: reads it (raw or already
/// manifested), chunks everything with `chunking`, and persists the result
/// back in place.
IngestSummary ingest_knowledge_base(const std::string& kb_dir,
                                    const ChunkingConfig& chunking);

struct IndexBuildSummary {
    std::size_t text_entries = 0;
    std::size_t image_entries = 0;
};

/// Embeds every chunk (384-d) and every locally stored image (512-d) and
/// writes the two flat indices next to the configured paths.
IndexBuildSummary build_indices(const PipelineConfig& config);

/// Loaded, ready-to-inspect pipeline. Opening validates that the knowledge
/// base and indices exist (unless retrieval is disabled). Inspections are
/// safe to run concurrently; all shared state is read-only.
class InspectionPipeline {
public:
    InspectionPipeline(const PipelineConfig& config, const RunOptions& options);

    /// retrieve -> prompt -> analyze -> extract for one image file.
    InspectionReport inspect(const std::string& image_path) const;

    bool rag_enabled() const { return rag_enabled_; }

private:
    PipelineConfig config_;
    RunOptions options_;
    bool rag_enabled_ = true;
    std::optional<KnowledgeBase> kb_;
    std::optional<FlatIndex> text_index_;
    std::optional<FlatIndex> image_index_;
    std::unique_ptr<EmbeddingProvider> provider_;
    std::unique_ptr<VlmClient> vlm_;
};

struct EvalOutcome {
    EvaluationSummary summary;
    std::vector<std::pair<std::string, std::string>> failures; // image, reason
    std::string summary_json_path;
    std::string summary_table_path;
};

/// Batch evaluation over a ground-truth manifest (JSON lines). Writes one
/// report JSON per image plus summary.json and summary.txt under `out_dir`.
/// `parallel` bounds concurrent inspections; the output is identical
/// regardless of the bound.
EvalOutcome run_eval(const PipelineConfig& config, const RunOptions& options,
                     const std::string& manifest_path, const std::string& out_dir,
                     int parallel = 1);

/// Re-summarizes previously written per-image reports against a manifest
/// without touching the model.
EvalOutcome summarize_reports(const std::string& reports_dir,
                              const std::string& manifest_path,
                              const std::string& out_dir);

} // namespace bladerag
