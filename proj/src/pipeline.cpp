#include "bladerag/pipeline.hpp"

#include <atomic>
#include <filesystem>
#include <mutex>
#include <thread>

#include "bladerag/errors.hpp"
#include "bladerag/text_utils.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace bladerag {

namespace {

bool is_url(const std::string& locator) {
    return locator.rfind("http://", 0) == 0 || locator.rfind("https://", 0) == 0;
}

EmbeddingProviderConfig embedding_from_json(const json& j) {
    EmbeddingProviderConfig cfg;
    std::string mode = j.value("mode", "deterministic-test");
    if (mode == "deterministic-test") {
        cfg.mode = EmbeddingMode::DeterministicTest;
    } else if (mode == "remote") {
        cfg.mode = EmbeddingMode::Remote;
    } else {
        throw ConfigError("unknown embedding mode: " + mode);
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.endpoint = j.value("endpoint", cfg.endpoint);
    cfg.text_model = j.value("text_model", cfg.text_model);
    cfg.image_model = j.value("image_model", cfg.image_model);
    cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
    cfg.timeout_seconds = j.value("timeout_seconds", cfg.timeout_seconds);
    cfg.max_in_flight = j.value("max_in_flight", cfg.max_in_flight);
    return cfg;
}

json embedding_to_json(const EmbeddingProviderConfig& cfg) {
    return json{{"mode", cfg.mode == EmbeddingMode::Remote ? "remote"
                                                           : "deterministic-test"},
                {"seed", cfg.seed},
                {"endpoint", cfg.endpoint},
                {"text_model", cfg.text_model},
                {"image_model", cfg.image_model},
                {"api_key_env", cfg.api_key_env},
                {"timeout_seconds", cfg.timeout_seconds},
                {"max_in_flight", cfg.max_in_flight}};
}

VlmConfig vlm_from_json(const json& j) {
    VlmConfig cfg;
    cfg.endpoint = j.value("endpoint", cfg.endpoint);
    cfg.model = j.value("model", cfg.model);
    cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
    cfg.timeout_seconds = j.value("timeout_seconds", cfg.timeout_seconds);
    cfg.max_retries = j.value("max_retries", cfg.max_retries);
    cfg.temperature = j.value("temperature", cfg.temperature);
    cfg.max_in_flight = j.value("max_in_flight", cfg.max_in_flight);
    cfg.backoff_seconds = j.value("backoff_seconds", cfg.backoff_seconds);
    return cfg;
}

json vlm_to_json(const VlmConfig& cfg) {
    return json{{"endpoint", cfg.endpoint},
                {"model", cfg.model},
                {"api_key_env", cfg.api_key_env},
                {"timeout_seconds", cfg.timeout_seconds},
                {"max_retries", cfg.max_retries},
                {"temperature", cfg.temperature},
                {"max_in_flight", cfg.max_in_flight},
                {"backoff_seconds", cfg.backoff_seconds}};
}

ChunkingConfig chunking_from_json(const json& j) {
    ChunkingConfig cfg;
    cfg.chunk_size = j.value("chunk_size", cfg.chunk_size);
    cfg.chunk_overlap = j.value("chunk_overlap", cfg.chunk_overlap);
    if (j.contains("separators"))
        cfg.separators = j["separators"].get<std::vector<std::string>>();
    return cfg;
}

} // namespace

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig cfg;
    cfg.kb_dir = j.value("knowledge_base", cfg.kb_dir);
    cfg.text_index_path = j.value("text_index", cfg.text_index_path);
    cfg.image_index_path = j.value("image_index", cfg.image_index_path);
    if (j.contains("embedding")) cfg.embedding = embedding_from_json(j["embedding"]);
    if (j.contains("vlm")) cfg.vlm = vlm_from_json(j["vlm"]);
    if (j.contains("retrieval")) {
        const json& r = j["retrieval"];
        cfg.retrieval.top_k = r.value("top_k", cfg.retrieval.top_k);
        cfg.retrieval.top_n = r.value("top_n", cfg.retrieval.top_n);
        cfg.retrieval.query = r.value("query", cfg.retrieval.query);
    }
    if (j.contains("chunking")) cfg.chunking = chunking_from_json(j["chunking"]);
    cfg.rag_enabled = j.value("rag_enabled", cfg.rag_enabled);
    return cfg;
}

json PipelineConfig::to_json() const {
    return json{{"knowledge_base", kb_dir},
                {"text_index", text_index_path},
                {"image_index", image_index_path},
                {"embedding", embedding_to_json(embedding)},
                {"vlm", vlm_to_json(vlm)},
                {"retrieval",
                 json{{"top_k", retrieval.top_k},
                      {"top_n", retrieval.top_n},
                      {"query", retrieval.query}}},
                {"chunking",
                 json{{"chunk_size", chunking.chunk_size},
                      {"chunk_overlap", chunking.chunk_overlap},
                      {"separators", chunking.separators}}},
                {"rag_enabled", rag_enabled}};
}

PipelineConfig PipelineConfig::load_file(const std::string& path) {
    json j;
    try {
        j = json::parse(text::read_file(path));
    } catch (const IoError& e) {
        throw ConfigError(std::string("cannot read config file: ") + e.what());
    } catch (const json::exception& e) {
        throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }
    return from_json(j);
}

IngestSummary ingest_knowledge_base(const std::string& kb_dir,
                                    const ChunkingConfig& chunking) {
    KnowledgeBase kb = KnowledgeBase::load(kb_dir, chunking);
    kb.save(kb_dir);
    return {kb.document_count(), kb.chunk_count(), kb.image_count()};
}

IndexBuildSummary build_indices(const PipelineConfig& config) {
    KnowledgeBase kb = KnowledgeBase::load(config.kb_dir, config.chunking);
    auto provider = make_embedding_provider(config.embedding);

    FlatIndex text_index(kTextEmbeddingDim);
    for (const Chunk& chunk : kb.chunks())
        text_index.insert(chunk.id, provider->embed_text(chunk.text));

    FlatIndex image_index(kImageEmbeddingDim);
    for (const ImageEntry& image : kb.images()) {
        auto bytes = kb.image_bytes(image.id);
        if (!bytes)
            throw KnowledgeBaseError(
                "no local bytes for image " + image.id +
                "; URL-backed reference images cannot be embedded offline");
        image_index.insert(image.id, provider->embed_image(*bytes));
    }

    text_index.save(config.text_index_path);
    image_index.save(config.image_index_path);
    return {text_index.size(), image_index.size()};
}

InspectionPipeline::InspectionPipeline(const PipelineConfig& config,
                                       const RunOptions& options)
    : config_(config), options_(options) {
    rag_enabled_ = config.rag_enabled && !options.no_rag;

    if (rag_enabled_) {
        kb_ = KnowledgeBase::load(config_.kb_dir, config_.chunking);
        if (!fs::exists(config_.text_index_path))
            throw IndexError("text index not found: " + config_.text_index_path +
                             " (run `index build` first)");
        if (!fs::exists(config_.image_index_path))
            throw IndexError("image index not found: " + config_.image_index_path +
                             " (run `index build` first)");
        text_index_ = FlatIndex::load(config_.text_index_path);
        image_index_ = FlatIndex::load(config_.image_index_path);
        provider_ = make_embedding_provider(config_.embedding);
    }

    std::shared_ptr<ChatTransport> transport;
    std::shared_ptr<ReplayStore> record_store;
    if (options_.replay_dir) {
        transport = std::make_shared<ReplayTransport>(
            std::make_shared<ReplayStore>(*options_.replay_dir));
    } else {
        transport = std::make_shared<HttpChatTransport>(config_.vlm);
    }
    if (options_.record_dir)
        record_store = std::make_shared<ReplayStore>(*options_.record_dir);
    vlm_ = std::make_unique<VlmClient>(config_.vlm, std::move(transport),
                                       std::move(record_store));
}

InspectionReport InspectionPipeline::inspect(const std::string& image_path) const {
    AssembledPrompt prompt;
    ContextUsed context;

    if (rag_enabled_) {
        QueryContext query;
        query.text_query = options_.query.value_or(config_.retrieval.query);
        query.top_k = options_.top_k.value_or(config_.retrieval.top_k);
        query.top_n = options_.top_n.value_or(config_.retrieval.top_n);
        // Cloud-hosted inspection images cannot be embedded locally; the
        // image modality is skipped and only the VLM sees the URL.
        if (!is_url(image_path)) query.image_bytes = text::read_file(image_path);

        RetrievalResult retrieval =
            retrieve(*kb_, *provider_, *text_index_, *image_index_, query);
        prompt = build_prompt(retrieval);
        context = context_from(retrieval);
    } else {
        prompt = build_prompt_without_context();
    }

    std::string prompt_text = prompt.text();
    if (options_.dump_prompt_path)
        text::write_file(*options_.dump_prompt_path, prompt_text);

    VlmExchange exchange = vlm_->analyze(prompt_text, image_path);
    return assemble_report(exchange, context);
}

EvalOutcome run_eval(const PipelineConfig& config, const RunOptions& options,
                     const std::string& manifest_path, const std::string& out_dir,
                     int parallel) {
    if (parallel < 1) throw ConfigError("--parallel must be at least 1");
    std::vector<GroundTruthRecord> records = load_ground_truth(manifest_path);
    if (records.empty()) throw ConfigError("ground-truth manifest is empty");

    InspectionPipeline pipeline(config, options);
    fs::path manifest_dir = fs::path(manifest_path).parent_path();
    fs::path reports_dir = fs::path(out_dir) / "reports";
    std::error_code ec;
    fs::create_directories(reports_dir, ec);

    struct Slot {
        std::optional<EvaluatedItem> item;
        std::optional<std::string> error;
    };
    std::vector<Slot> slots(records.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= records.size()) return;
            const GroundTruthRecord& rec = records[i];
            fs::path image_path = fs::path(rec.image).is_absolute()
                                      ? fs::path(rec.image)
                                      : manifest_dir / rec.image;
            try {
                InspectionReport report = pipeline.inspect(image_path.string());
                std::string key = exchange_key_for(rec.image);
                text::write_file((reports_dir / (key + ".report.json")).string(),
                                 report.to_json().dump(2) + "\n");
                slots[i].item = EvaluatedItem{key, std::move(report), rec};
            } catch (const std::exception& e) {
                slots[i].error = e.what();
            }
        }
    };

    int workers = std::min<int>(parallel, static_cast<int>(records.size()));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    EvalOutcome outcome;
    std::vector<EvaluatedItem> items;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (slots[i].item) {
            items.push_back(std::move(*slots[i].item));
        } else {
            outcome.failures.emplace_back(records[i].image,
                                          slots[i].error.value_or("unknown failure"));
        }
    }
    if (items.empty())
        throw TransportError("evaluation produced no completed inspections");

    outcome.summary = summarize(items, static_cast<int>(records.size()));
    outcome.summary_json_path = (fs::path(out_dir) / "summary.json").string();
    outcome.summary_table_path = (fs::path(out_dir) / "summary.txt").string();
    text::write_file(outcome.summary_json_path, outcome.summary.to_json().dump(2) + "\n");
    text::write_file(outcome.summary_table_path, outcome.summary.to_table());
    return outcome;
}

EvalOutcome summarize_reports(const std::string& reports_dir,
                              const std::string& manifest_path,
                              const std::string& out_dir) {
    std::vector<GroundTruthRecord> records = load_ground_truth(manifest_path);
    if (records.empty()) throw ConfigError("ground-truth manifest is empty");

    EvalOutcome outcome;
    std::vector<EvaluatedItem> items;
    for (const GroundTruthRecord& rec : records) {
        std::string key = exchange_key_for(rec.image);
        fs::path path = fs::path(reports_dir) / (key + ".report.json");
        if (!fs::exists(path)) {
            outcome.failures.emplace_back(rec.image, "no report file: " + path.string());
            continue;
        }
        InspectionReport report;
        try {
            report = InspectionReport::from_json(json::parse(text::read_file(path.string())));
        } catch (const json::exception& e) {
            throw ConfigError("report file " + path.string() +
                              " does not match the report schema: " + e.what());
        }
        items.push_back(EvaluatedItem{key, std::move(report), rec});
    }
    if (items.empty()) throw ConfigError("no readable reports under " + reports_dir);

    outcome.summary = summarize(items, static_cast<int>(records.size()));
    outcome.summary_json_path = (fs::path(out_dir) / "summary.json").string();
    outcome.summary_table_path = (fs::path(out_dir) / "summary.txt").string();
    text::write_file(outcome.summary_json_path, outcome.summary.to_json().dump(2) + "\n");
    text::write_file(outcome.summary_table_path, outcome.summary.to_table());
    return outcome;
}

} // namespace bladerag
