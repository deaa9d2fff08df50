#include "samgcnn/frontend.hpp"

#include <cmath>
#include <complex>

#include <unsupported/Eigen/FFT>

namespace samgcnn {

void FrontendConfig::validate() const {
    if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
    if (num_mel_bins < 1) throw ConfigError("num_mel_bins must be >= 1");
    if (frame_hop > frame_length) throw ConfigError("frame_hop must not exceed frame_length");
    if (fft_size < frame_samples())
        throw ConfigError("fft_size must be >= frame_length * sample_rate");
    if (log_floor <= 0) throw ConfigError("log_floor must be positive");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Eigen::MatrixXd stft_magnitude(const Eigen::VectorXd& samples, const FrontendConfig& cfg) {
    cfg.validate();
    const int frame_len = cfg.frame_samples();
    const int hop = cfg.hop_samples();
    const Eigen::Index length = samples.size();
    if (length < hop) throw DegenerateInputError("input shorter than one hop");

    const Eigen::Index num_frames = length / hop + 1;
    const int num_bins = cfg.fft_size / 2 + 1;

    // Periodic Hann window.
    Eigen::VectorXd window(frame_len);
    for (int n = 0; n < frame_len; ++n)
        window[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / frame_len);

    // Centered framing: frame t covers [t*hop - frame_len/2, t*hop + frame_len/2),
    // out-of-range samples filled by reflection.
    auto sample_at = [&](Eigen::Index i) -> double {
        if (i < 0) i = -i;
        if (i >= length) i = 2 * (length - 1) - i;
        if (i < 0 || i >= length) return 0.0;  // degenerate very-short inputs
        return samples[i];
    };

    Eigen::MatrixXd mags(num_bins, num_frames);
    Eigen::FFT<double> fft;
    std::vector<double> frame(cfg.fft_size, 0.0);
    std::vector<std::complex<double>> spectrum(cfg.fft_size);
    const Eigen::Index half = frame_len / 2;
    for (Eigen::Index t = 0; t < num_frames; ++t) {
        const Eigen::Index start = t * hop - half;
        for (int n = 0; n < frame_len; ++n) frame[n] = sample_at(start + n) * window[n];
        std::fill(frame.begin() + frame_len, frame.end(), 0.0);
        fft.fwd(spectrum, frame);
        for (int k = 0; k < num_bins; ++k) mags(k, t) = std::abs(spectrum[k]);
    }
    return mags;
}

Eigen::VectorXd mel_filter_centers_hz(const FrontendConfig& cfg) {
    const double mel_max = hz_to_mel(cfg.sample_rate / 2.0);
    Eigen::VectorXd centers(cfg.num_mel_bins);
    for (int m = 0; m < cfg.num_mel_bins; ++m)
        centers[m] = mel_to_hz((m + 1) * mel_max / (cfg.num_mel_bins + 1));
    return centers;
}

Eigen::MatrixXd mel_filterbank(const FrontendConfig& cfg) {
    cfg.validate();
    const int num_bins = cfg.fft_size / 2 + 1;
    const double mel_max = hz_to_mel(cfg.sample_rate / 2.0);

    // Edge frequencies: num_mel_bins + 2 points equally spaced on the mel scale.
    Eigen::VectorXd edges_hz(cfg.num_mel_bins + 2);
    for (int i = 0; i < cfg.num_mel_bins + 2; ++i)
        edges_hz[i] = mel_to_hz(i * mel_max / (cfg.num_mel_bins + 1));

    Eigen::MatrixXd filters = Eigen::MatrixXd::Zero(cfg.num_mel_bins, num_bins);
    const double bin_hz = static_cast<double>(cfg.sample_rate) / cfg.fft_size;
    for (int m = 0; m < cfg.num_mel_bins; ++m) {
        const double lo = edges_hz[m], center = edges_hz[m + 1], hi = edges_hz[m + 2];
        bool any = false;
        for (int k = 0; k < num_bins; ++k) {
            const double f = k * bin_hz;
            double w = 0.0;
            if (f > lo && f < center)
                w = (f - lo) / (center - lo);
            else if (f >= center && f < hi)
                w = (hi - f) / (hi - center);
            if (w > 0.0) any = true;
            filters(m, k) = w;
        }
        if (!any)
            throw ConfigError("mel filter " + std::to_string(m) +
                              " is empty; fft_size too small for num_mel_bins");
    }
    return filters;
}

FbankMatrix extract_fbank(const AudioClip& clip, int channel, const FrontendConfig& cfg) {
    if (channel < 0 || channel >= clip.num_channels())
        throw ShapeError("channel index out of range");
    Eigen::MatrixXd mags = stft_magnitude(clip.samples[channel], cfg);
    Eigen::MatrixXd mel = mel_filterbank(cfg);
    FbankMatrix out;
    out.values = ((mel * mags).array() + cfg.log_floor).log().matrix();
    out.channel_index = channel;
    out.clip_id = clip.clip_id;
    return out;
}

GlobalNormStats fit_global_stats(const std::vector<FbankMatrix>& features) {
    if (features.empty()) throw DegenerateInputError("cannot fit stats on an empty feature set");
    const Eigen::Index bins = features[0].values.rows();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(bins);
    Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(bins);
    long total_frames = 0;
    for (const auto& f : features) {
        if (f.values.rows() != bins) throw ShapeError("inconsistent mel-bin counts");
        sum += f.values.rowwise().sum();
        sum_sq += f.values.array().square().matrix().rowwise().sum();
        total_frames += f.values.cols();
    }
    GlobalNormStats s;
    s.mean = sum / static_cast<double>(total_frames);
    Eigen::VectorXd var =
        (sum_sq / static_cast<double>(total_frames) - s.mean.array().square().matrix())
            .cwiseMax(0.0);
    s.std = var.array().sqrt().max(kStdFloor).matrix();
    return s;
}

FbankMatrix global_normalize(const FbankMatrix& f, const GlobalNormStats& s) {
    if (f.values.rows() != s.mean.size()) throw ShapeError("stats/feature mel-bin mismatch");
    FbankMatrix out = f;
    out.values = ((f.values.colwise() - s.mean).array().colwise() / s.std.array()).matrix();
    return out;
}

FbankMatrix time_normalize(const FbankMatrix& f) {
    const Eigen::Index frames = f.values.cols();
    if (frames < 2) throw DegenerateInputError("time normalization needs at least 2 frames");
    FbankMatrix out = f;
    Eigen::VectorXd mean = f.values.rowwise().mean();
    Eigen::VectorXd var = ((f.values.colwise() - mean).array().square().rowwise().sum() /
                           static_cast<double>(frames))
                              .matrix();
    Eigen::VectorXd std = var.array().max(0.0).sqrt().max(kStdFloor).matrix();
    out.values = ((f.values.colwise() - mean).array().colwise() / std.array()).matrix();
    return out;
}

}  // namespace samgcnn
