// Command-line front end for the blade-inspection pipeline:
//   bladerag kb ingest <dir>      normalize + chunk a knowledge-base directory
//   bladerag index build          embed chunks/images into the flat indices
//   bladerag inspect <image>      retrieve -> prompt -> analyze -> extract
//   bladerag eval <manifest>      batch evaluation with summary statistics
//   bladerag report <dir> <manifest>   re-summarize existing reports

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bladerag/errors.hpp"
#include "bladerag/pipeline.hpp"
#include "bladerag/text_utils.hpp"

namespace {

// Exit codes, chosen so batch scripts can tell failure classes apart.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitKnowledgeBase = 3;
constexpr int kExitTransport = 4;
constexpr int kExitStrictParse = 5;

struct CommonFlags {
    std::string config_path;
    bool no_rag = false;
    std::optional<std::size_t> top_k;
    std::optional<std::size_t> top_n;
    std::optional<std::string> query;
    std::optional<std::string> replay_dir;
    std::optional<std::string> record_dir;
    std::optional<std::string> dump_prompt;
    bool strict = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Pipeline config file (JSON)");
    cmd->add_flag("--no-rag", flags.no_rag,
                  "Disable retrieval; prompt carries no reference context");
    cmd->add_option("--top-k", flags.top_k, "Initial hits per modality");
    cmd->add_option("--top-n", flags.top_n, "Final retained context size");
    cmd->add_option("--query", flags.query, "Override the retrieval query");
    cmd->add_option("--replay", flags.replay_dir,
                    "Serve VLM responses from this replay directory");
    cmd->add_option("--record", flags.record_dir,
                    "Record VLM exchanges into this directory");
    cmd->add_option("--dump-prompt", flags.dump_prompt,
                    "Write the assembled prompt verbatim to this file");
    cmd->add_flag("--strict", flags.strict,
                  "Exit nonzero when a report carries parse warnings");
}

bladerag::PipelineConfig load_config(const CommonFlags& flags) {
    if (!flags.config_path.empty())
        return bladerag::PipelineConfig::load_file(flags.config_path);
    return {};
}

bladerag::RunOptions run_options(const CommonFlags& flags) {
    bladerag::RunOptions options;
    options.query = flags.query;
    options.top_k = flags.top_k;
    options.top_n = flags.top_n;
    options.dump_prompt_path = flags.dump_prompt;
    options.no_rag = flags.no_rag;
    options.replay_dir = flags.replay_dir;
    options.record_dir = flags.record_dir;
    return options;
}

int classify(const std::exception& e) {
    if (dynamic_cast<const bladerag::ConfigError*>(&e)) return kExitConfig;
    if (dynamic_cast<const bladerag::DimensionMismatchError*>(&e)) return kExitConfig;
    if (dynamic_cast<const bladerag::KnowledgeBaseError*>(&e)) return kExitKnowledgeBase;
    if (dynamic_cast<const bladerag::IndexError*>(&e)) return kExitKnowledgeBase;
    if (dynamic_cast<const bladerag::IoError*>(&e)) return kExitKnowledgeBase;
    if (dynamic_cast<const bladerag::TransportError*>(&e)) return kExitTransport;
    if (dynamic_cast<const bladerag::ProtocolError*>(&e)) return kExitTransport;
    return kExitConfig;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Retrieval-grounded VLM inspection for wind turbine blade imagery"};
    app.require_subcommand(1);

    CommonFlags flags;

    // kb ingest
    auto* kb_cmd = app.add_subcommand("kb", "Knowledge-base maintenance");
    kb_cmd->require_subcommand(1);
    std::string ingest_dir;
    auto* ingest_cmd = kb_cmd->add_subcommand("ingest", "Chunk and persist a knowledge base");
    ingest_cmd->add_option("dir", ingest_dir, "Knowledge-base directory")->required();
    ingest_cmd->add_option("--config", flags.config_path, "Pipeline config file (JSON)");

    // index build
    auto* index_cmd = app.add_subcommand("index", "Vector-index maintenance");
    index_cmd->require_subcommand(1);
    auto* build_cmd = index_cmd->add_subcommand("build", "Embed the knowledge base into flat indices");
    build_cmd->add_option("--config", flags.config_path, "Pipeline config file (JSON)");

    // inspect
    std::string inspect_image;
    std::string inspect_out;
    auto* inspect_cmd = app.add_subcommand("inspect", "Analyze one image");
    inspect_cmd->add_option("image", inspect_image, "Image file or URL")->required();
    inspect_cmd->add_option("--out", inspect_out, "Also write the report JSON here");
    add_common_flags(inspect_cmd, flags);

    // eval
    std::string eval_manifest;
    std::string eval_out_dir = "eval-out";
    int eval_parallel = 1;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a batch against ground truth");
    eval_cmd->add_option("manifest", eval_manifest, "Ground-truth manifest (JSON lines)")
        ->required();
    eval_cmd->add_option("--out-dir", eval_out_dir, "Output directory");
    eval_cmd->add_option("--parallel", eval_parallel, "Concurrent inspections");
    add_common_flags(eval_cmd, flags);

    // report
    std::string report_reports_dir;
    std::string report_manifest;
    std::string report_out_dir = "eval-out";
    auto* report_cmd = app.add_subcommand("report", "Summarize existing report files");
    report_cmd->add_option("reports", report_reports_dir, "Directory of *.report.json")
        ->required();
    report_cmd->add_option("manifest", report_manifest, "Ground-truth manifest")->required();
    report_cmd->add_option("--out-dir", report_out_dir, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest_cmd->parsed()) {
            auto config = load_config(flags);
            auto summary = bladerag::ingest_knowledge_base(ingest_dir, config.chunking);
            std::cout << "ingested " << summary.documents << " documents, "
                      << summary.chunks << " chunks, " << summary.images
                      << " reference images into " << ingest_dir << "\n";
            return kExitOk;
        }

        if (build_cmd->parsed()) {
            auto config = load_config(flags);
            auto summary = bladerag::build_indices(config);
            std::cout << "indexed " << summary.text_entries << " text chunks -> "
                      << config.text_index_path << "\n"
                      << "indexed " << summary.image_entries << " images -> "
                      << config.image_index_path << "\n";
            return kExitOk;
        }

        if (inspect_cmd->parsed()) {
            auto config = load_config(flags);
            bladerag::InspectionPipeline pipeline(config, run_options(flags));
            bladerag::InspectionReport report = pipeline.inspect(inspect_image);
            std::string rendered = report.to_json().dump(2) + "\n";
            std::cout << rendered;
            if (!inspect_out.empty()) bladerag::text::write_file(inspect_out, rendered);
            if (flags.strict && !report.parse_warnings.empty()) {
                std::cerr << "strict mode: report carries parse warnings\n";
                return kExitStrictParse;
            }
            return kExitOk;
        }

        if (eval_cmd->parsed()) {
            auto config = load_config(flags);
            auto outcome = bladerag::run_eval(config, run_options(flags), eval_manifest,
                                              eval_out_dir, eval_parallel);
            std::cout << outcome.summary.to_table();
            for (const auto& [image, reason] : outcome.failures)
                std::cerr << "failed: " << image << ": " << reason << "\n";
            std::cout << "summary written to " << outcome.summary_json_path << "\n";
            if (flags.strict) {
                // Escalate when any per-image report parsed with warnings.
                bool warned = false;
                namespace fs = std::filesystem;
                for (const auto& f :
                     fs::directory_iterator(fs::path(eval_out_dir) / "reports")) {
                    auto report = bladerag::InspectionReport::from_json(
                        nlohmann::json::parse(bladerag::text::read_file(f.path().string())));
                    if (!report.parse_warnings.empty()) warned = true;
                }
                if (warned) {
                    std::cerr << "strict mode: at least one report carries parse warnings\n";
                    return kExitStrictParse;
                }
            }
            return kExitOk;
        }

        if (report_cmd->parsed()) {
            auto outcome = bladerag::summarize_reports(report_reports_dir, report_manifest,
                                                       report_out_dir);
            std::cout << outcome.summary.to_table();
            for (const auto& [image, reason] : outcome.failures)
                std::cerr << "skipped: " << image << ": " << reason << "\n";
            std::cout << "summary written to " << outcome.summary_json_path << "\n";
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return classify(e);
    }
    return kExitConfig;
}
