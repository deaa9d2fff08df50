#include "samgcnn/dataset.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "samgcnn/io_util.hpp"

namespace fs = std::filesystem;

namespace samgcnn {

const std::vector<std::string>& class_names() {
    static const std::vector<std::string> names = {
        "Absence",         "Cooking",         "Dishwashing", "Eating",      "Other",
        "Social activity", "Vacuum cleaning", "Watching TV", "Working"};
    return names;
}

void Manifest::validate() const {
    std::set<std::string> ids;
    for (const auto& r : rows) {
        if (!ids.insert(r.clip_id).second)
            throw DataError("duplicate clip_id in manifest: " + r.clip_id);
        if (r.label < 0 || r.label > 8)
            throw DataError("label out of range for clip " + r.clip_id);
        if (r.fold < 1 || r.fold > 4)
            throw DataError("fold out of range for clip " + r.clip_id);
        if (r.split != "train" && r.split != "test")
            throw DataError("split must be train or test for clip " + r.clip_id);
    }
}

Manifest parse_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty manifest: " + path);
    if (line != "clip_id,path,fold,split,label,session")
        throw FormatError("bad manifest header: " + path);
    Manifest m;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        ManifestRow r;
        std::string fold, label, session;
        if (!std::getline(row, r.clip_id, ',') || !std::getline(row, r.path, ',') ||
            !std::getline(row, fold, ',') || !std::getline(row, r.split, ',') ||
            !std::getline(row, label, ',') || !std::getline(row, session))
            throw FormatError(path + ":" + std::to_string(line_no) + ": malformed manifest row");
        try {
            r.fold = std::stoi(fold);
            r.label = std::stoi(label);
            r.session = std::stoi(session);
        } catch (const std::exception&) {
            throw FormatError(path + ":" + std::to_string(line_no) + ": non-numeric field");
        }
        m.rows.push_back(std::move(r));
    }
    m.validate();
    return m;
}

void write_manifest(const Manifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest: " + path);
    out << "clip_id,path,fold,split,label,session\n";
    for (const auto& r : m.rows)
        out << r.clip_id << ',' << r.path << ',' << r.fold << ',' << r.split << ',' << r.label
            << ',' << r.session << '\n';
}

std::vector<ClassRecipe> default_recipes() {
    std::vector<ClassRecipe> r(9);
    // The confusable trio shares tones near 500/530 Hz that land in
    // overlapping mel filters; the others are spectrally well separated.
    r[0] = {"Absence", {500.0}, 0.22, 0.015, 0, 0, 5, 9};
    r[4] = {"Other", {500.0, 530.0}, 0.16, 0.015, 0, 0, 5, 9};
    r[8] = {"Working", {530.0}, 0.22, 0.015, 0, 0, 5, 9};
    r[1] = {"Cooking", {1000.0, 1400.0}, 0.25, 0.01, 0, 0, 5, 9};
    r[2] = {"Dishwashing", {1900.0}, 0.25, 0.01, 0, 4.0, 5, 9};
    r[3] = {"Eating", {2500.0, 2900.0}, 0.22, 0.01, 0, 0, 5, 9};
    r[5] = {"Social activity", {3400.0}, 0.25, 0.01, 0, 2.0, 5, 9};
    r[6] = {"Vacuum cleaning", {120.0}, 0.12, 0.20, 900.0, 0, 5, 9};
    r[7] = {"Watching TV", {4200.0, 5000.0}, 0.22, 0.01, 0, 0, 5, 9};
    return r;
}

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b) {
    uint64_t x = seed ^ (a * 0x9E3779B97F4A7C15ULL) ^ (b * 0xC2B2AE3D27D4EB4FULL);
    x ^= x >> 33;
    x *= 0xFF51AFD7ED558CCDULL;
    x ^= x >> 33;
    return x;
}

}  // namespace

AudioClip synth_clip(const ClassRecipe& recipe, int label, int index, const SynthSpec& spec) {
    std::mt19937_64 rng(mix_seed(spec.seed, static_cast<uint64_t>(label),
                                 static_cast<uint64_t>(index)));
    const int total = static_cast<int>(std::lround(spec.duration * spec.sample_rate));
    const int seg_len = spec.sample_rate;  // 1-second segments
    const int num_segments = total / seg_len;

    // Choose which 1-second segments carry the class signal.
    std::uniform_int_distribution<int> active_dist(recipe.min_active_segments,
                                                   std::min(recipe.max_active_segments,
                                                            num_segments));
    const int num_active = active_dist(rng);
    std::vector<int> seg_ids(num_segments);
    for (int i = 0; i < num_segments; ++i) seg_ids[i] = i;
    std::shuffle(seg_ids.begin(), seg_ids.end(), rng);
    std::vector<bool> active(num_segments, false);
    for (int i = 0; i < num_active; ++i) active[seg_ids[i]] = true;

    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * M_PI);
    std::vector<double> phases(recipe.tone_hz.size());
    for (auto& p : phases) p = phase_dist(rng);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Base (mono) track: tones + class noise on active segments, faint
    // background elsewhere.
    Eigen::VectorXd base = Eigen::VectorXd::Zero(total);
    const double lp_a = recipe.noise_lowpass_hz > 0
                            ? std::exp(-2.0 * M_PI * recipe.noise_lowpass_hz / spec.sample_rate)
                            : 0.0;
    double lp_state = 0.0;
    const int ramp = spec.sample_rate / 20;  // 50 ms fade at segment edges
    for (int n = 0; n < total; ++n) {
        const int seg = std::min(n / seg_len, num_segments - 1);
        const double t = static_cast<double>(n) / spec.sample_rate;
        double v = 0.002 * gauss(rng);  // background floor
        if (active[seg]) {
            const int in_seg = n - seg * seg_len;
            double env = 1.0;
            if (in_seg < ramp) env = static_cast<double>(in_seg) / ramp;
            if (seg_len - 1 - in_seg < ramp) env = static_cast<double>(seg_len - 1 - in_seg) / ramp;
            double am = 1.0;
            if (recipe.am_rate_hz > 0)
                am = 0.55 + 0.45 * std::sin(2.0 * M_PI * recipe.am_rate_hz * t);
            double tone = 0.0;
            for (size_t i = 0; i < recipe.tone_hz.size(); ++i)
                tone += std::sin(2.0 * M_PI * recipe.tone_hz[i] * t + phases[i]);
            double noise = recipe.noise_amp * gauss(rng);
            if (lp_a > 0) {
                lp_state = lp_a * lp_state + (1.0 - lp_a) * noise;
                noise = lp_state * 4.0;  // make up for low-pass attenuation
            }
            v += env * (am * recipe.tone_amp * tone + noise);
        }
        base[n] = v;
    }

    // Four microphones: small gain and delay differences plus independent
    // sensor noise.
    AudioClip clip;
    clip.sample_rate = spec.sample_rate;
    clip.label = label;
    std::uniform_real_distribution<double> gain_dist(0.85, 1.15);
    std::uniform_int_distribution<int> delay_dist(0, 16);
    for (int c = 0; c < spec.channels; ++c) {
        const double gain = gain_dist(rng);
        const int delay = delay_dist(rng);
        Eigen::VectorXd ch = Eigen::VectorXd::Zero(total);
        for (int n = delay; n < total; ++n) ch[n] = gain * base[n - delay];
        for (int n = 0; n < total; ++n) ch[n] += 0.001 * gauss(rng);
        clip.samples.push_back(std::move(ch));
    }
    const double peak = [&] {
        double p = 0;
        for (const auto& ch : clip.samples) p = std::max(p, ch.cwiseAbs().maxCoeff());
        return p;
    }();
    if (peak > 0.95)
        for (auto& ch : clip.samples) ch *= 0.95 / peak;
    return clip;
}

std::pair<Manifest, std::vector<AudioClip>> synth_generate_clips(const SynthSpec& spec) {
    if (spec.num_folds < 1 || spec.num_folds > 4) throw ConfigError("num_folds must be 1..4");
    if (spec.session_size < 1) throw ConfigError("session_size must be >= 1");
    const auto recipes = default_recipes();
    Manifest manifest;
    std::vector<AudioClip> clips;
    for (int label = 0; label < 9; ++label) {
        // Per class: split clips into sessions, folds round-robin over
        // sessions, a trailing fraction of each fold's clips held out.
        const int per_fold =
            (spec.clips_per_class + spec.num_folds - 1) / spec.num_folds;
        const int test_per_fold = std::max(
            1, static_cast<int>(std::lround(spec.test_fraction * per_fold)));
        std::vector<int> fold_fill(static_cast<size_t>(spec.num_folds), 0);
        for (int i = 0; i < spec.clips_per_class; ++i) {
            const int session = label * 1000 + i / spec.session_size;
            const int fold_idx = (i / spec.session_size) % spec.num_folds;
            ManifestRow row;
            char id[64];
            std::snprintf(id, sizeof id, "clip_c%d_%03d", label, i);
            row.clip_id = id;
            row.path = row.clip_id + std::string(".wav");
            row.fold = fold_idx + 1;
            row.session = session;
            row.label = label;
            const int pos = fold_fill[static_cast<size_t>(fold_idx)]++;
            row.split = pos >= per_fold - test_per_fold ? "test" : "train";
            manifest.rows.push_back(std::move(row));
            clips.push_back(synth_clip(recipes[static_cast<size_t>(label)], label, i, spec));
            clips.back().clip_id = manifest.rows.back().clip_id;
        }
    }
    manifest.validate();
    return {manifest, clips};
}

Manifest synth_generate(const SynthSpec& spec, const std::string& out_dir) {
    fs::create_directories(out_dir);
    auto [manifest, clips] = synth_generate_clips(spec);
    for (size_t i = 0; i < clips.size(); ++i) {
        const std::string path = (fs::path(out_dir) / manifest.rows[i].path).string();
        save_wav(path, clips[i]);
    }
    write_manifest(manifest, (fs::path(out_dir) / "manifest.csv").string());
    return manifest;
}

std::string feature_file_name(const std::string& clip_id, int channel) {
    return clip_id + "_ch" + std::to_string(channel) + ".fbk";
}

void write_feature_file(const std::string& path, const FbankMatrix& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write feature file: " + path);
    out.write("FBK1", 4);
    io::write_u32(out, static_cast<uint32_t>(f.values.rows()));
    io::write_u32(out, static_cast<uint32_t>(f.values.cols()));
    io::write_u32(out, static_cast<uint32_t>(f.channel_index));
    for (Eigen::Index b = 0; b < f.values.rows(); ++b)
        for (Eigen::Index t = 0; t < f.values.cols(); ++t)
            io::write_f32(out, static_cast<float>(f.values(b, t)));
    if (!out) throw DataError("feature write failed: " + path);
}

FbankMatrix read_feature_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open feature file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "FBK1", 4) != 0)
        throw FormatError("bad feature magic (expected FBK1): " + path);
    const uint32_t bins = io::read_u32(in);
    const uint32_t frames = io::read_u32(in);
    FbankMatrix f;
    f.channel_index = static_cast<int>(io::read_u32(in));
    f.values.resize(bins, frames);
    for (uint32_t b = 0; b < bins; ++b)
        for (uint32_t t = 0; t < frames; ++t) f.values(b, t) = io::read_f32(in);
    if (!in) throw FormatError("truncated feature file: " + path);
    return f;
}

void write_stats_file(const std::string& path, const GlobalNormStats& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write stats file: " + path);
    out.write("FST1", 4);
    io::write_u32(out, static_cast<uint32_t>(s.mean.size()));
    for (Eigen::Index i = 0; i < s.mean.size(); ++i)
        io::write_f32(out, static_cast<float>(s.mean[i]));
    for (Eigen::Index i = 0; i < s.std.size(); ++i)
        io::write_f32(out, static_cast<float>(s.std[i]));
}

GlobalNormStats read_stats_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open stats file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "FST1", 4) != 0)
        throw FormatError("bad stats magic (expected FST1): " + path);
    const uint32_t bins = io::read_u32(in);
    GlobalNormStats s;
    s.mean.resize(bins);
    s.std.resize(bins);
    for (uint32_t i = 0; i < bins; ++i) s.mean[i] = io::read_f32(in);
    for (uint32_t i = 0; i < bins; ++i) s.std[i] = io::read_f32(in);
    if (!in) throw FormatError("truncated stats file: " + path);
    return s;
}

ExtractResult extract_features(const Manifest& m, const FrontendConfig& cfg,
                               const std::string& audio_dir, const std::string& out_dir) {
    m.validate();
    fs::create_directories(out_dir);
    auto resolve = [&](const std::string& p) {
        return fs::path(p).is_absolute() ? p : (fs::path(audio_dir) / p).string();
    };
    std::vector<std::string> missing;
    for (const auto& row : m.rows)
        if (!fs::exists(resolve(row.path))) missing.push_back(resolve(row.path));
    if (!missing.empty()) {
        std::string msg = "missing audio files:";
        for (const auto& p : missing) msg += " " + p;
        throw DataError(msg);
    }

    ExtractResult result;
    std::vector<FbankMatrix> train_features;
    for (const auto& row : m.rows) {
        AudioClip clip = load_wav(resolve(row.path));
        clip.clip_id = row.clip_id;
        for (int c = 0; c < clip.num_channels(); ++c) {
            FbankMatrix f = extract_fbank(clip, c, cfg);
            write_feature_file((fs::path(out_dir) / feature_file_name(row.clip_id, c)).string(),
                               f);
            if (row.split == "train") train_features.push_back(std::move(f));
        }
        ManifestRow out_row = row;
        out_row.path = feature_file_name(row.clip_id, 0);
        result.feature_manifest.rows.push_back(std::move(out_row));
    }
    result.stats = fit_global_stats(train_features);
    write_stats_file((fs::path(out_dir) / "stats.fst").string(), result.stats);
    write_manifest(result.feature_manifest, (fs::path(out_dir) / "features.csv").string());
    return result;
}

std::vector<FeatureSample> load_feature_samples(const Manifest& m, const std::string& feature_dir,
                                                int channels) {
    std::vector<FeatureSample> samples;
    for (const auto& row : m.rows) {
        for (int c = 0; c < channels; ++c) {
            const std::string path =
                (fs::path(feature_dir) / feature_file_name(row.clip_id, c)).string();
            FbankMatrix f = read_feature_file(path);
            FeatureSample s;
            s.clip_id = row.clip_id;
            s.channel = c;
            s.label = row.label;
            s.fbank = f.values.cast<float>();
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

namespace {

bool parse_bool(const std::string& v, const std::string& where) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(where + ": expected boolean, got '" + v + "'");
}

}  // namespace

PipelineConfig parse_config(std::istream& in, const std::string& source_name) {
    PipelineConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        // trim
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        const std::string where = source_name + ":" + std::to_string(line_no);
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "frame_length") cfg.frontend.frame_length = std::stod(value);
            else if (key == "frame_hop") cfg.frontend.frame_hop = std::stod(value);
            else if (key == "num_mel_bins") cfg.frontend.num_mel_bins = std::stoi(value);
            else if (key == "sample_rate") cfg.frontend.sample_rate = std::stoi(value);
            else if (key == "fft_size") cfg.frontend.fft_size = std::stoi(value);
            else if (key == "log_floor") cfg.frontend.log_floor = std::stod(value);
            else if (key == "learning_rate") cfg.train.learning_rate = std::stod(value);
            else if (key == "batch_size") cfg.train.batch_size = std::stoi(value);
            else if (key == "epochs") cfg.train.epochs = std::stoi(value);
            else if (key == "validation_fraction")
                cfg.train.validation_fraction = std::stod(value);
            else if (key == "seed") cfg.train.seed = std::stoull(value);
            else if (key == "beta1") cfg.train.beta1 = std::stod(value);
            else if (key == "beta2") cfg.train.beta2 = std::stod(value);
            else if (key == "epsilon") cfg.train.epsilon = std::stod(value);
            else if (key == "select_by_macro_f1")
                cfg.train.select_by_macro_f1 = parse_bool(value, where);
            else if (key == "num_classes") cfg.model.num_classes = std::stoi(value);
            else if (key == "dropout_rate") cfg.model.dropout_rate = std::stod(value);
            else if (key == "use_attention") cfg.model.use_attention = parse_bool(value, where);
            else throw ConfigError(where + ": unknown key '" + key + "'");
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError(where + ": cannot parse value '" + value + "' for key '" + key +
                              "'");
        }
    }
    // The network input geometry follows from the frontend settings.
    cfg.model.mel_bins = cfg.frontend.num_mel_bins;
    cfg.model.frames =
        static_cast<int>(std::lround(cfg.frontend.sample_rate * 10.0)) /
            cfg.frontend.hop_samples() +
        1;
    return cfg;
}

PipelineConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    return parse_config(in, path);
}

}  // namespace samgcnn
