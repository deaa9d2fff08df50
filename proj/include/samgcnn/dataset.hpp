#pragma once

#include <map>
#include <string>
#include <vector>

#include "samgcnn/frontend.hpp"
#include "samgcnn/model.hpp"
#include "samgcnn/train.hpp"
#include "samgcnn/wav.hpp"

namespace samgcnn {

// The nine activities, index 0..8; {0,4,8} = {absence, other, working}.
const std::vector<std::string>& class_names();

struct ManifestRow {
    std::string clip_id;
    std::string path;  // audio or feature path
    int fold = 1;      // 1..4
    std::string split; // "train" | "test"
    int label = -1;    // 0..8
    int session = 0;
};

struct Manifest {
    std::vector<ManifestRow> rows;
    void validate() const;
};

// CSV with header "clip_id,path,fold,split,label,session".
Manifest parse_manifest(const std::string& path);
void write_manifest(const Manifest& m, const std::string& path);

// Synthetic stand-in corpus: nine spectrally distinct class recipes, with
// {absence, other, working} sharing near-identical spectra so the 9-way
// system confuses them.
struct ClassRecipe {
    std::string name;
    std::vector<double> tone_hz;
    double tone_amp = 0.25;
    double noise_amp = 0.01;
    double noise_lowpass_hz = 0;  // 0 = white
    double am_rate_hz = 0;        // amplitude modulation of the tones
    int min_active_segments = 5;  // of the 10 one-second segments
    int max_active_segments = 9;
};

struct SynthSpec {
    int clips_per_class = 20;
    int sample_rate = 16000;
    double duration = 10.0;
    int channels = 4;
    int num_folds = 4;    // 1..4
    int session_size = 5; // clips per session
    double test_fraction = 0.2;
    uint64_t seed = 0;
};

std::vector<ClassRecipe> default_recipes();

// One deterministic clip; `index` is the per-class clip number.
AudioClip synth_clip(const ClassRecipe& recipe, int label, int index, const SynthSpec& spec);

// In-memory generation; clip order matches manifest row order.
std::pair<Manifest, std::vector<AudioClip>> synth_generate_clips(const SynthSpec& spec);

// Writes WAV files and manifest.csv under out_dir; returns the manifest.
Manifest synth_generate(const SynthSpec& spec, const std::string& out_dir);

// "FBK1" feature file: magic, u32 bins, u32 frames, u32 channel_index,
// float32 payload row-major.
void write_feature_file(const std::string& path, const FbankMatrix& f);
FbankMatrix read_feature_file(const std::string& path);

// "FST1" stats file: magic, u32 bins, f32 mean[], f32 std[].
void write_stats_file(const std::string& path, const GlobalNormStats& s);
GlobalNormStats read_stats_file(const std::string& path);

// Frontend, model, and training settings in one flat key-value file;
// '#' starts a comment; unknown keys are errors with line numbers.
struct PipelineConfig {
    FrontendConfig frontend;
    ModelConfig model;
    TrainConfig train;
};

PipelineConfig parse_config_file(const std::string& path);
PipelineConfig parse_config(std::istream& in, const std::string& source_name);

// Feature extraction for a manifest: one FBK1 file per (clip, channel)
// under out_dir, plus a stats file fitted on train-split features and a
// feature manifest ("features.csv") mirroring the input rows.
struct ExtractResult {
    Manifest feature_manifest;  // paths point at the per-clip channel-0 file
    GlobalNormStats stats;
};
ExtractResult extract_features(const Manifest& m, const FrontendConfig& cfg,
                               const std::string& audio_dir, const std::string& out_dir);

// Loads the per-channel samples of the given manifest rows from FBK1
// files written by extract_features.
std::vector<FeatureSample> load_feature_samples(const Manifest& m, const std::string& feature_dir,
                                                int channels);

std::string feature_file_name(const std::string& clip_id, int channel);

}  // namespace samgcnn
