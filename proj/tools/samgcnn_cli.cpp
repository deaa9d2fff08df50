#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "samgcnn/dataset.hpp"
#include "samgcnn/ensemble.hpp"
#include "samgcnn/metrics.hpp"

namespace fs = std::filesystem;
using namespace samgcnn;

namespace {

Manifest fold_rows(const Manifest& m, int fold, const std::string& split) {
    Manifest out;
    for (const auto& row : m.rows)
        if (row.fold == fold && row.split == split) out.rows.push_back(row);
    return out;
}

// A 3-class system trains on the confusable trio only, relabeled 0..2.
std::vector<FeatureSample> relabel_confusable(std::vector<FeatureSample> samples) {
    std::vector<FeatureSample> out;
    const ConfusableSet confusable;
    for (auto& s : samples) {
        for (int i = 0; i < 3; ++i)
            if (s.label == confusable.indices[i]) {
                s.label = i;
                out.push_back(std::move(s));
                break;
            }
    }
    return out;
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write: " + path);
    out << content;
}

int run(int argc, char** argv) {
    CLI::App app{"SAM-GCNN home-activity classification pipeline"};
    app.require_subcommand(1);

    std::string manifest_path, config_path, checkpoint_path, checkpoint2_path, out_path,
        audio_path;
    int fold = 1;
    uint64_t seed = 0;
    int clips_per_class = 20;
    int num_folds = 4;

    auto* synth = app.add_subcommand("synth", "generate the synthetic WAV corpus + manifest");
    synth->add_option("--out", out_path, "output directory")->required();
    synth->add_option("--seed", seed, "generator seed");
    synth->add_option("--clips-per-class", clips_per_class, "clips per class");
    synth->add_option("--folds", num_folds, "number of cross-validation folds (1..4)");

    auto* extract = app.add_subcommand("extract", "extract FBK1 features + global stats");
    extract->add_option("--manifest", manifest_path, "audio manifest CSV")->required();
    extract->add_option("--config", config_path, "pipeline config file");
    extract->add_option("--out", out_path, "feature output directory")->required();

    auto* train_cmd = app.add_subcommand("train", "train on one fold's train split");
    train_cmd->add_option("--manifest", manifest_path, "manifest CSV (features extracted)")
        ->required();
    train_cmd->add_option("--fold", fold, "fold id (1..4)");
    train_cmd->add_option("--config", config_path, "pipeline config file");
    train_cmd->add_option("--checkpoint", checkpoint_path, "resume checkpoint");
    train_cmd->add_option("--out", out_path, "output checkpoint path")->required();
    train_cmd->add_option("--seed", seed, "training seed (overrides config)");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a fold's test split");
    eval_cmd->add_option("--manifest", manifest_path, "manifest CSV (features extracted)")
        ->required();
    eval_cmd->add_option("--fold", fold, "fold id (1..4)");
    eval_cmd->add_option("--checkpoint", checkpoint_path, "system I checkpoint")->required();
    eval_cmd->add_option("--checkpoint2", checkpoint2_path, "3-class system II checkpoint");
    eval_cmd->add_option("--out", out_path, "report output directory")->required();

    auto* predict = app.add_subcommand("predict", "classify one WAV file");
    predict->add_option("audio", audio_path, "input WAV")->required();
    predict->add_option("--config", config_path, "pipeline config file");
    predict->add_option("--checkpoint", checkpoint_path, "system I checkpoint")->required();
    predict->add_option("--checkpoint2", checkpoint2_path, "3-class system II checkpoint");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    PipelineConfig cfg;
    if (!config_path.empty()) cfg = parse_config_file(config_path);

    if (synth->parsed()) {
        SynthSpec spec;
        spec.seed = seed;
        spec.clips_per_class = clips_per_class;
        spec.num_folds = num_folds;
        Manifest m = synth_generate(spec, out_path);
        std::cout << "wrote " << m.rows.size() << " clips to " << out_path << "\n";
        return 0;
    }

    if (extract->parsed()) {
        Manifest m = parse_manifest(manifest_path);
        const std::string audio_dir = fs::path(manifest_path).parent_path().string();
        ExtractResult r = extract_features(m, cfg.frontend, audio_dir, out_path);
        std::cout << "extracted features for " << m.rows.size() << " clips into " << out_path
                  << "\n";
        return 0;
    }

    if (train_cmd->parsed()) {
        Manifest m = parse_manifest(manifest_path);
        const std::string feature_dir = fs::path(manifest_path).parent_path().string();
        GlobalNormStats stats = read_stats_file((fs::path(feature_dir) / "stats.fst").string());
        if (seed != 0) cfg.train.seed = seed;

        auto train_samples =
            load_feature_samples(fold_rows(m, fold, "train"), feature_dir, 4);
        auto test_samples = load_feature_samples(fold_rows(m, fold, "test"), feature_dir, 4);
        if (cfg.model.num_classes == 3) {
            train_samples = relabel_confusable(std::move(train_samples));
            test_samples = relabel_confusable(std::move(test_samples));
        }
        auto [val_samples, unused] =
            split_validation(test_samples, cfg.train.validation_fraction, cfg.train.seed);

        std::optional<Checkpoint> resume;
        if (!checkpoint_path.empty()) resume = load_checkpoint(checkpoint_path);
        SamGcnnModel<float> model =
            resume ? model_from_checkpoint(*resume)
                   : SamGcnnModel<float>::init(cfg.model, cfg.train.seed);
        TrainResult result = train(model, train_samples, val_samples, stats, cfg.train,
                                   resume ? &*resume : nullptr);
        save_checkpoint(result.best, out_path);

        std::ofstream log(out_path + ".log");
        log << "epoch,train_loss,train_acc,val_acc\n";
        for (const auto& e : result.log)
            log << e.epoch << ',' << e.train_loss << ',' << e.train_acc << ',' << e.val_acc
                << '\n';
        std::cout << "best epoch " << result.best.epoch << " val_acc "
                  << result.best.val_accuracy << " -> " << out_path << "\n";
        return 0;
    }

    if (eval_cmd->parsed()) {
        Manifest m = parse_manifest(manifest_path);
        const std::string feature_dir = fs::path(manifest_path).parent_path().string();
        GlobalNormStats stats = read_stats_file((fs::path(feature_dir) / "stats.fst").string());
        Checkpoint ckpt = load_checkpoint(checkpoint_path);
        SamGcnnModel<float> system1 = model_from_checkpoint(ckpt);

        Manifest test = fold_rows(m, fold, "test");
        auto samples = load_feature_samples(test, feature_dir, 4);
        std::map<std::string, std::vector<const FeatureSample*>> by_clip;
        for (const auto& s : samples) by_clip[s.clip_id].push_back(&s);

        std::vector<PredictionRecord> records;
        const bool ensembled = !checkpoint2_path.empty();
        if (ensembled) {
            Checkpoint ckpt2 = load_checkpoint(checkpoint2_path);
            SamGcnnModel<float> system2 = model_from_checkpoint(ckpt2);
            for (const auto& [clip_id, channels] : by_clip)
                records.push_back(
                    ensemble_predict(channels, system1, stats, system2, stats));
        } else {
            for (const auto& [clip_id, channels] : by_clip) {
                ClipPosterior p = clip_posterior(system1, channels, stats);
                PredictionRecord rec;
                rec.clip_id = clip_id;
                rec.posterior = p.values;
                rec.predicted = argmax(p.values);
                records.push_back(std::move(rec));
            }
        }

        std::map<std::string, int> truth;
        for (const auto& row : test.rows) truth[row.clip_id] = row.label;
        auto [report, cm] = evaluate_fold(records, truth, system1.cfg.num_classes);

        fs::create_directories(out_path);
        write_text((fs::path(out_path) / "report.txt").string(),
                   format_f1_report(report, class_names()));
        write_text((fs::path(out_path) / "confusion.csv").string(), confusion_csv(cm));
        std::ofstream pred_out((fs::path(out_path) / "predictions.txt").string());
        for (const auto& rec : records) pred_out << format_prediction(rec, ensembled) << '\n';
        std::cout << format_f1_report(report, class_names());
        return 0;
    }

    if (predict->parsed()) {
        Checkpoint ckpt = load_checkpoint(checkpoint_path);
        SamGcnnModel<float> system1 = model_from_checkpoint(ckpt);
        AudioClip clip = load_wav(audio_path);
        clip.clip_id = fs::path(audio_path).stem().string();
        if (clip.sample_rate != cfg.frontend.sample_rate)
            throw DataError("sample rate " + std::to_string(clip.sample_rate) +
                            " does not match configured rate " +
                            std::to_string(cfg.frontend.sample_rate));

        // Stats: look for stats.fst next to the checkpoint.
        const std::string stats_path =
            (fs::path(checkpoint_path).parent_path() / "stats.fst").string();
        GlobalNormStats stats = read_stats_file(stats_path);

        std::vector<FeatureSample> samples;
        for (int c = 0; c < clip.num_channels(); ++c) {
            FeatureSample s;
            s.clip_id = clip.clip_id;
            s.channel = c;
            s.fbank = extract_fbank(clip, c, cfg.frontend).values.cast<float>();
            samples.push_back(std::move(s));
        }
        std::vector<const FeatureSample*> channels;
        for (const auto& s : samples) channels.push_back(&s);

        PredictionRecord rec;
        if (!checkpoint2_path.empty()) {
            Checkpoint ckpt2 = load_checkpoint(checkpoint2_path);
            SamGcnnModel<float> system2 = model_from_checkpoint(ckpt2);
            rec = ensemble_predict(channels, system1, stats, system2, stats);
        } else {
            ClipPosterior p = clip_posterior(system1, channels, stats);
            rec.clip_id = clip.clip_id;
            rec.posterior = p.values;
            rec.predicted = argmax(p.values);
        }
        const auto& names = class_names();
        std::cout << (rec.predicted < static_cast<int>(names.size())
                          ? names[static_cast<size_t>(rec.predicted)]
                          : std::to_string(rec.predicted))
                  << "\n"
                  << format_prediction(rec, !checkpoint2_path.empty()) << "\n";
        return 0;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const DegenerateInputError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
