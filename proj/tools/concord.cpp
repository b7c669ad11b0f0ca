// concord — command-line front end for the (dis)agreement classifier:
// dataset preparation, training, evaluation, transfer experiments, and the
// numerical self-check. Exit codes: 0 success, 2 input/usage error,
// 3 numerical-check failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "concord/checkpoint.hpp"
#include "concord/datasets.hpp"
#include "concord/harness.hpp"
#include "concord/lexicon.hpp"
#include "concord/manifest.hpp"
#include "concord/model.hpp"
#include "concord/run_config.hpp"
#include "concord/textprep.hpp"

namespace {

using namespace concord;

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

LexiconSet load_lexicon_set(const std::vector<std::string>& paths) {
    std::vector<Lexicon> lexicons;
    lexicons.reserve(paths.size());
    for (const std::string& p : paths) lexicons.push_back(load_lexicon(p));
    return LexiconSet::from(std::move(lexicons));
}

void print_label_counts(const std::vector<QRPair>& pairs) {
    std::array<std::size_t, 3> counts{};
    for (const QRPair& p : pairs) counts[static_cast<int>(p.label)] += 1;
    std::cout << "agree=" << counts[0] << " disagree=" << counts[1] << " none=" << counts[2]
              << " total=" << pairs.size() << "\n";
}

// ------------------------------ prepare --------------------------------

int cmd_prepare(const std::string& threads_path, const std::string& iac_path,
                const std::string& texts_path, const std::string& out_path) {
    std::vector<QRPair> pairs;
    if (!threads_path.empty()) {
        DeriveResult derived = derive_abcd_labels(load_raw_posts_jsonl(threads_path));
        if (derived.missing_side_warnings > 0)
            std::cerr << "warning: " << derived.missing_side_warnings
                      << " pair(s) lack a side label, labeled none\n";
        pairs = std::move(derived.pairs);
    } else {
        const std::vector<IACAnnotation> anns = load_iac_annotations_jsonl(iac_path);
        std::vector<QRPair> texts = load_unlabeled_pairs_jsonl(texts_path);
        std::unordered_map<std::string, QRPair*> by_id;
        for (QRPair& p : texts) by_id[p.source_id] = &p;
        std::size_t skipped = texts.size();
        for (const IACAnnotation& a : anns) {
            auto it = by_id.find(a.pair_id);
            if (it == by_id.end())
                throw StructuralError("annotation '" + a.pair_id + "' has no matching pair in " +
                                      texts_path);
            it->second->label = merge_iac(a);
            pairs.push_back(*it->second);
            --skipped;
        }
        if (skipped > 0)
            std::cerr << "warning: " << skipped << " pair(s) had no annotation and were dropped\n";
    }
    write_pairs_jsonl(pairs, out_path);
    print_label_counts(pairs);
    return 0;
}

// ------------------------------- split ---------------------------------

int cmd_split(const std::string& pairs_path, const std::vector<double>& fractions,
              std::uint64_t seed, const std::string& out_prefix) {
    if (fractions.size() != 3)
        throw ConfigError("split: --fractions needs exactly three values");
    const DataSplits splits = split_dataset(load_pairs_jsonl(pairs_path),
                                            {fractions[0], fractions[1], fractions[2]}, seed);
    write_pairs_jsonl(splits.train, out_prefix + ".train.jsonl");
    write_pairs_jsonl(splits.dev, out_prefix + ".dev.jsonl");
    write_pairs_jsonl(splits.test, out_prefix + ".test.jsonl");
    std::cout << "train=" << splits.train.size() << " dev=" << splits.dev.size()
              << " test=" << splits.test.size() << "\n";
    return 0;
}

// ------------------------------- stats ---------------------------------

int cmd_stats(const std::string& pairs_path, const std::string& csv_path,
              const std::string& json_path) {
    const StatsReport report = dataset_stats(load_pairs_jsonl(pairs_path), tokenize);
    write_text(csv_path, stats_histogram_csv(report));
    const std::string summary = stats_summary_json(report).dump(2) + "\n";
    if (!json_path.empty())
        write_text(json_path, summary);
    else
        std::cerr << summary;
    return 0;
}

// ------------------------------- train ---------------------------------

struct PipelineInputs {
    std::string pairs, dev_pairs, test_pairs;
    std::string embeddings;
    std::vector<std::string> lexicons;
};

struct LoadedPipeline {
    RunData data;
    EmbeddingTable embeddings;
    LexiconSet lexicons;
};

LoadedPipeline load_pipeline(const PipelineInputs& in, const ModelConfig& mc) {
    LoadedPipeline p;
    p.data.train = load_pairs_jsonl(in.pairs);
    p.data.dev = in.dev_pairs.empty() ? p.data.train : load_pairs_jsonl(in.dev_pairs);
    p.data.test = in.test_pairs.empty() ? p.data.train : load_pairs_jsonl(in.test_pairs);
    if (mc.gru_active()) {
        if (in.embeddings.empty())
            throw ConfigError("this feature mode needs --embeddings");
        p.embeddings = load_embeddings(in.embeddings, mc.embed_dim);
        p.data.embeddings = &p.embeddings;
    }
    if (mc.lex_active() && !in.lexicons.empty()) {
        p.lexicons = load_lexicon_set(in.lexicons);
        p.data.lexicons = &p.lexicons;
    } else if (mc.feature_mode == FeatureMode::lex_only) {
        throw ConfigError("feature_mode=lex_only needs at least one --lexicon");
    }
    return p;
}

void add_pipeline_inputs(RunManifest& manifest, const PipelineInputs& in) {
    manifest.inputs.emplace_back("pairs", in.pairs);
    if (!in.dev_pairs.empty()) manifest.inputs.emplace_back("dev_pairs", in.dev_pairs);
    if (!in.test_pairs.empty()) manifest.inputs.emplace_back("test_pairs", in.test_pairs);
    if (!in.embeddings.empty()) manifest.inputs.emplace_back("embeddings", in.embeddings);
    for (const std::string& lex : in.lexicons) manifest.inputs.emplace_back("lexicon", lex);
}

int cmd_train(const PipelineInputs& inputs, RunConfig config, const std::string& out_checkpoint,
              std::string history_path, std::string manifest_path, bool save_optimizer) {
    if (history_path.empty()) history_path = out_checkpoint + ".history.json";
    if (manifest_path.empty()) manifest_path = out_checkpoint + ".manifest.json";

    LoadedPipeline pipeline = load_pipeline(inputs, config.model);
    config.model.lex_dim = pipeline.data.lexicons ? pipeline.data.lexicons->dim() : 0;
    config.model.validate();

    RunManifest manifest;
    manifest.command = "train";
    manifest.config = config;
    add_pipeline_inputs(manifest, inputs);
    manifest.outputs.emplace_back("checkpoint", out_checkpoint);
    manifest.outputs.emplace_back("history", history_path);
    manifest.write(manifest_path);

    std::vector<std::string> layout;
    if (pipeline.data.lexicons) layout = pipeline.data.lexicons->layout().keys();
    Rng init_rng(config.train.seed);
    SiameseModel model = build_model(config.model, init_rng, layout);

    const std::vector<Example> train_ex = vectorize(pipeline.data.train, pipeline.data.embeddings,
                                                    pipeline.data.lexicons, config.model);
    const std::vector<Example> dev_ex = vectorize(pipeline.data.dev, pipeline.data.embeddings,
                                                  pipeline.data.lexicons, config.model);

    AdamSnapshot adam;
    const TrainHistory history = train(model, train_ex, dev_ex, config.train, &adam);
    for (const EpochRecord& r : history.epochs)
        std::cerr << "epoch " << r.epoch << ": train_loss=" << r.train_loss
                  << " dev_weighted_f1=" << r.dev.weighted_f1 << "\n";

    save_checkpoint(model, out_checkpoint, save_optimizer ? &adam : nullptr);
    write_text(history_path, history_to_json(history).dump(2) + "\n");
    std::cout << "best_epoch=" << history.best_epoch
              << " best_dev_weighted_f1=" << detail::fmt_metric(history.best_dev_weighted_f1)
              << " checkpoint=" << out_checkpoint << "\n";
    return 0;
}

// ---------------------------- eval / predict ---------------------------

int cmd_eval(const std::string& checkpoint_path, const PipelineInputs& inputs,
             const std::string& out_path) {
    LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
    const ModelConfig& mc = loaded.model.config;
    PipelineInputs in = inputs;
    LoadedPipeline pipeline = load_pipeline(in, mc);
    check_transfer_compatible(loaded.model, pipeline.data);
    const std::vector<Example> examples = vectorize(pipeline.data.train, pipeline.data.embeddings,
                                                    pipeline.data.lexicons, mc);
    write_text(out_path, metrics_csv(evaluate(loaded.model, examples)));
    return 0;
}

int cmd_predict(const std::string& checkpoint_path, const std::string& quote,
                const std::string& response, const PipelineInputs& inputs) {
    LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
    const ModelConfig& mc = loaded.model.config;

    EmbeddingTable embeddings;
    LexiconSet lexicons;
    const EmbeddingTable* emb = nullptr;
    const LexiconSet* lex = nullptr;
    if (mc.gru_active()) {
        if (inputs.embeddings.empty()) throw ConfigError("this checkpoint needs --embeddings");
        embeddings = load_embeddings(inputs.embeddings, mc.embed_dim);
        emb = &embeddings;
    }
    if (mc.lex_active() && mc.lex_dim > 0) {
        if (inputs.lexicons.empty()) throw ConfigError("this checkpoint needs --lexicon files");
        lexicons = load_lexicon_set(inputs.lexicons);
        lex = &lexicons;
        if (lexicons.layout().keys() != loaded.model.lex_layout)
            throw CompatibilityError("lexicon files do not reproduce the checkpoint layout");
    }

    QRPair pair{quote, response, Label::none, "cli"};
    const std::vector<Example> ex = vectorize({pair}, emb, lex, mc);
    const Tensor probs = forward(loaded.model, ex[0].features);
    nlohmann::json j;
    j["label"] = label_name(static_cast<Label>(predict_class(probs)));
    j["probs"] = probs.data;
    std::cout << j.dump() << "\n";
    return 0;
}

// ------------------------ experiment commands --------------------------

int cmd_ablation(const PipelineInputs& inputs, const RunConfig& config,
                 const std::string& out_path, const std::string& manifest_path) {
    PipelineInputs in = inputs;
    ModelConfig probe = config.model;
    probe.feature_mode = FeatureMode::both;  // load everything once
    LoadedPipeline pipeline = load_pipeline(in, probe);
    if (!manifest_path.empty()) {
        RunManifest manifest;
        manifest.command = "ablation";
        manifest.config = config;
        add_pipeline_inputs(manifest, in);
        manifest.outputs.emplace_back("report", out_path.empty() ? "-" : out_path);
        manifest.write(manifest_path);
    }
    const std::vector<ReportRow> rows =
        run_feature_ablation(pipeline.data, config.model, config.train);
    write_text(out_path, report_csv(rows));
    return 0;
}

int cmd_sweep(const PipelineInputs& inputs, const RunConfig& config,
              const std::vector<std::size_t>& lengths, const std::string& out_path,
              const std::string& manifest_path) {
    PipelineInputs in = inputs;
    LoadedPipeline pipeline = load_pipeline(in, config.model);
    if (!manifest_path.empty()) {
        RunManifest manifest;
        manifest.command = "sweep";
        manifest.config = config;
        add_pipeline_inputs(manifest, in);
        manifest.outputs.emplace_back("report", out_path.empty() ? "-" : out_path);
        manifest.write(manifest_path);
    }
    const std::vector<ReportRow> rows =
        run_seqlen_sweep(pipeline.data, config.model, config.train, lengths);
    write_text(out_path, report_csv(rows, "maxlen"));
    return 0;
}

int cmd_transfer(const std::string& checkpoint_path, const PipelineInputs& inputs,
                 const RunConfig& config, const std::vector<std::string>& mode_names,
                 const std::string& out_path, const std::string& manifest_path) {
    LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
    PipelineInputs in = inputs;
    LoadedPipeline pipeline = load_pipeline(in, loaded.model.config);
    check_transfer_compatible(loaded.model, pipeline.data);

    std::vector<TransferMode> modes;
    for (const std::string& name : mode_names) {
        if (name == "all") {
            modes = {TransferMode::direct, TransferMode::tuning, TransferMode::transfer,
                     TransferMode::retrain_last_2, TransferMode::retrain_last_3};
            break;
        }
        modes.push_back(transfer_mode_from_string(name));
    }
    if (!manifest_path.empty()) {
        RunManifest manifest;
        manifest.command = "transfer";
        manifest.config = config;
        manifest.inputs.emplace_back("checkpoint", checkpoint_path);
        add_pipeline_inputs(manifest, in);
        manifest.outputs.emplace_back("report", out_path.empty() ? "-" : out_path);
        manifest.write(manifest_path);
    }
    std::vector<ReportRow> rows;
    for (TransferMode mode : modes)
        rows.push_back(run_transfer(loaded.model, pipeline.data, mode, config.train));
    write_text(out_path, report_csv(rows));
    return 0;
}

// ----------------------------- gradcheck -------------------------------

int cmd_gradcheck(std::size_t embed_dim, std::size_t gru_hidden, std::size_t lex_dim,
                  std::size_t maxlen, std::size_t batch, std::uint64_t seed, double step,
                  double tolerance) {
    ModelConfig mc;
    mc.embed_dim = embed_dim;
    mc.gru_hidden = gru_hidden;
    mc.lex_dim = lex_dim;
    mc.maxlen = maxlen;
    mc.feature_mode = lex_dim > 0 ? FeatureMode::both : FeatureMode::gru_only;
    mc.validate();

    Rng rng(seed);
    SiameseModel model = build_model(mc, rng);
    std::vector<PairFeatures> batch_inputs;
    std::vector<int> labels;
    for (std::size_t i = 0; i < batch; ++i) {
        PairFeatures p;
        p.quote.matrix = Tensor::zeros({maxlen, embed_dim});
        p.response.matrix = Tensor::zeros({maxlen, embed_dim});
        for (double& v : p.quote.matrix.data) v = rng.next_uniform(-1.0, 1.0);
        for (double& v : p.response.matrix.data) v = rng.next_uniform(-1.0, 1.0);
        p.quote.real_length = maxlen;
        p.response.real_length = maxlen;
        p.quote_lex = Tensor::zeros({lex_dim});
        p.response_lex = Tensor::zeros({lex_dim});
        for (double& v : p.quote_lex.data) v = rng.next_uniform(-1.0, 1.0);
        for (double& v : p.response_lex.data) v = rng.next_uniform(-1.0, 1.0);
        batch_inputs.push_back(std::move(p));
        labels.push_back(static_cast<int>(i % 3));
    }

    const std::uint64_t dropout_seed = seed ^ 0xD120u;
    Rng grad_rng(dropout_seed);
    const ModelGrads analytic =
        loss_and_grads(model, batch_inputs, labels, grad_rng, /*update_running=*/false);

    std::vector<std::pair<std::string, Tensor*>> params;
    std::vector<const Tensor*> grads;
    const std::vector<NamedParam> trainable = trainable_parameters(model);
    for (std::size_t i = 0; i < trainable.size(); ++i) {
        params.emplace_back(trainable[i].name, trainable[i].tensor);
        grads.push_back(&analytic.grads[i]);
    }
    const GradCheckReport report = gradient_check(
        params, grads,
        [&]() { return training_loss(model, batch_inputs, labels, dropout_seed); }, step);

    for (const GradCheckEntry& e : report.per_param)
        std::cout << e.name << " max_rel_err=" << e.max_rel_err << "\n";
    std::cout << "checked=" << report.coords_checked << " max_rel_err=" << report.max_rel_err
              << " worst=" << report.worst_param << " tolerance=" << tolerance << "\n";
    if (!report.pass(tolerance)) {
        std::cerr << "gradient check FAILED\n";
        return 3;
    }
    std::cout << "gradient check passed\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Siamese GRU + lexicon (dis)agreement classifier"};
    app.set_version_flag("--version", concord::kToolVersion);
    app.require_subcommand(1);

    // prepare
    auto* prepare = app.add_subcommand("prepare", "Build labeled pairs from raw corpora");
    std::string threads_path, iac_path, texts_path, prepare_out;
    auto* opt_threads = prepare->add_option("--threads", threads_path,
                                            "Raw debate threads JSONL (side-label derivation)");
    auto* opt_iac = prepare->add_option("--iac", iac_path, "IAC annotation JSONL (score merge)");
    prepare->add_option("--pairs", texts_path, "Unlabeled pairs JSONL (texts for --iac)");
    prepare->add_option("--out", prepare_out, "Output pairs JSONL")->required();
    opt_threads->excludes(opt_iac);

    // split
    auto* split_cmd = app.add_subcommand("split", "Deterministically split a pairs file");
    std::string split_pairs, split_prefix;
    std::vector<double> split_fractions{0.8, 0.1, 0.1};
    std::uint64_t split_seed = 0;
    split_cmd->add_option("--pairs", split_pairs, "Pairs JSONL")->required();
    split_cmd->add_option("--fractions", split_fractions, "Train/dev/test fractions");
    split_cmd->add_option("--seed", split_seed, "Shuffle seed");
    split_cmd->add_option("--out-prefix", split_prefix, "Prefix for .train/.dev/.test.jsonl")
        ->required();

    // stats
    auto* stats = app.add_subcommand("stats", "Label counts and sequence-length histogram");
    std::string stats_pairs, stats_csv, stats_json;
    stats->add_option("--pairs", stats_pairs, "Pairs JSONL")->required();
    stats->add_option("--out-csv", stats_csv, "Histogram CSV path (default stdout)");
    stats->add_option("--out-json", stats_json, "Summary JSON path (default stderr)");

    // shared pipeline options builder
    PipelineInputs train_in, eval_in, predict_in, transfer_in, sweep_in, ablation_in;
    auto add_pipeline = [](CLI::App* cmd, PipelineInputs& in, bool with_splits) {
        cmd->add_option("--pairs", in.pairs, "Pairs JSONL")->required();
        if (with_splits) {
            cmd->add_option("--dev-pairs", in.dev_pairs,
                            "Dev pairs JSONL (default: the training pairs)");
            cmd->add_option("--test-pairs", in.test_pairs,
                            "Test pairs JSONL (default: the training pairs)");
        }
        cmd->add_option("--embeddings", in.embeddings, "Embedding text file");
        cmd->add_option("--lexicon", in.lexicons, "Lexicon TSV (repeatable, order fixes layout)");
    };

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
    std::string train_config_path, train_out, train_history, train_manifest;
    bool save_optimizer = false;
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    add_pipeline(train_cmd, train_in, true);
    train_cmd->add_option("--config", train_config_path, "key=value config file");
    train_cmd->add_option("--out-checkpoint", train_out, "Checkpoint path")->required();
    train_cmd->add_option("--history-out", train_history,
                          "History JSON path (default <checkpoint>.history.json)");
    train_cmd->add_option("--manifest-out", train_manifest,
                          "Manifest path (default <checkpoint>.manifest.json)");
    train_cmd->add_flag("--save-optimizer", save_optimizer,
                        "Embed Adam state in the checkpoint");
    train_cmd->add_option("--seed", seed_override, "Seed override")
        ->each([&](const std::string&) { seed_given = true; });

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on labeled pairs");
    std::string eval_checkpoint, eval_out;
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint path")->required();
    add_pipeline(eval_cmd, eval_in, false);
    eval_cmd->add_option("--out", eval_out, "Metrics CSV path (default stdout)");

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "Classify one quote/response pair");
    std::string predict_checkpoint, predict_quote, predict_response;
    predict_cmd->add_option("--checkpoint", predict_checkpoint, "Checkpoint path")->required();
    predict_cmd->add_option("--quote", predict_quote, "Quote text")->required();
    predict_cmd->add_option("--response", predict_response, "Response text")->required();
    predict_cmd->add_option("--embeddings", predict_in.embeddings, "Embedding text file");
    predict_cmd->add_option("--lexicon", predict_in.lexicons, "Lexicon TSV (repeatable)");

    // transfer
    auto* transfer_cmd = app.add_subcommand("transfer", "Apply a pre-trained model to a dataset");
    std::string transfer_checkpoint, transfer_config_path, transfer_out, transfer_manifest;
    std::vector<std::string> transfer_modes{"all"};
    transfer_cmd->add_option("--checkpoint", transfer_checkpoint, "Pre-trained checkpoint")
        ->required();
    add_pipeline(transfer_cmd, transfer_in, true);
    transfer_cmd->add_option("--mode", transfer_modes,
                             "direct|tuning|transfer|retrain_last_2|retrain_last_3|all");
    transfer_cmd->add_option("--config", transfer_config_path, "key=value config file");
    transfer_cmd->add_option("--out", transfer_out, "Report CSV path (default stdout)");
    transfer_cmd->add_option("--manifest-out", transfer_manifest, "Manifest path");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Train across maximum sequence lengths");
    std::string sweep_config_path, sweep_out, sweep_manifest;
    std::vector<std::size_t> sweep_lengths{32, 64, 128};
    add_pipeline(sweep_cmd, sweep_in, true);
    sweep_cmd->add_option("--config", sweep_config_path, "key=value config file");
    sweep_cmd->add_option("--lengths", sweep_lengths, "Sequence lengths to sweep");
    sweep_cmd->add_option("--out", sweep_out, "Report CSV path (default stdout)");
    sweep_cmd->add_option("--manifest-out", sweep_manifest, "Manifest path");

    // ablation
    auto* ablation_cmd = app.add_subcommand("ablation", "Train the three feature variants");
    std::string ablation_config_path, ablation_out, ablation_manifest;
    add_pipeline(ablation_cmd, ablation_in, true);
    ablation_cmd->add_option("--config", ablation_config_path, "key=value config file");
    ablation_cmd->add_option("--out", ablation_out, "Report CSV path (default stdout)");
    ablation_cmd->add_option("--manifest-out", ablation_manifest, "Manifest path");

    // gradcheck
    auto* gradcheck_cmd =
        app.add_subcommand("gradcheck", "Check analytic gradients against finite differences");
    std::size_t gc_embed = 4, gc_hidden = 64, gc_lex = 8, gc_maxlen = 3, gc_batch = 2;
    std::uint64_t gc_seed = 7;
    double gc_step = 1e-5, gc_tol = 1e-4;
    gradcheck_cmd->add_option("--embed-dim", gc_embed, "Synthetic embedding dim");
    gradcheck_cmd->add_option("--gru-hidden", gc_hidden, "GRU hidden width");
    gradcheck_cmd->add_option("--lex-dim", gc_lex, "Lexicon feature dim");
    gradcheck_cmd->add_option("--maxlen", gc_maxlen, "Window length");
    gradcheck_cmd->add_option("--batch", gc_batch, "Batch size");
    gradcheck_cmd->add_option("--seed", gc_seed, "Seed");
    gradcheck_cmd->add_option("--step", gc_step, "Finite-difference step");
    gradcheck_cmd->add_option("--tolerance", gc_tol, "Max relative error allowed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*prepare) {
            if (threads_path.empty() == iac_path.empty())
                throw ConfigError("prepare: give exactly one of --threads or --iac");
            if (!iac_path.empty() && texts_path.empty())
                throw ConfigError("prepare: --iac needs --pairs for the texts");
            return cmd_prepare(threads_path, iac_path, texts_path, prepare_out);
        }
        if (*split_cmd) return cmd_split(split_pairs, split_fractions, split_seed, split_prefix);
        if (*stats) return cmd_stats(stats_pairs, stats_csv, stats_json);
        if (*train_cmd) {
            RunConfig config;
            if (!train_config_path.empty()) config = load_run_config(train_config_path);
            if (seed_given) config.train.seed = seed_override;
            return cmd_train(train_in, config, train_out, train_history, train_manifest,
                             save_optimizer);
        }
        if (*eval_cmd) return cmd_eval(eval_checkpoint, eval_in, eval_out);
        if (*predict_cmd)
            return cmd_predict(predict_checkpoint, predict_quote, predict_response, predict_in);
        if (*transfer_cmd) {
            RunConfig config;
            if (!transfer_config_path.empty()) config = load_run_config(transfer_config_path);
            return cmd_transfer(transfer_checkpoint, transfer_in, config, transfer_modes,
                                transfer_out, transfer_manifest);
        }
        if (*sweep_cmd) {
            RunConfig config;
            if (!sweep_config_path.empty()) config = load_run_config(sweep_config_path);
            return cmd_sweep(sweep_in, config, sweep_lengths, sweep_out, sweep_manifest);
        }
        if (*ablation_cmd) {
            RunConfig config;
            if (!ablation_config_path.empty()) config = load_run_config(ablation_config_path);
            return cmd_ablation(ablation_in, config, ablation_out, ablation_manifest);
        }
        if (*gradcheck_cmd)
            return cmd_gradcheck(gc_embed, gc_hidden, gc_lex, gc_maxlen, gc_batch, gc_seed,
                                 gc_step, gc_tol);
    } catch (const concord::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
