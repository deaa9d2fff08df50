#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "samgcnn/common.hpp"
#include "samgcnn/wav.hpp"

namespace samgcnn {

struct FrontendConfig {
    double frame_length = 0.040;  // seconds
    double frame_hop = 0.020;     // seconds
    int num_mel_bins = 40;
    int sample_rate = 16000;
    int fft_size = 1024;
    double log_floor = 1e-10;

    int frame_samples() const { return static_cast<int>(std::lround(frame_length * sample_rate)); }
    int hop_samples() const { return static_cast<int>(std::lround(frame_hop * sample_rate)); }
    void validate() const;
};

// Log-mel feature of a single channel: num_mel_bins x T.
struct FbankMatrix {
    Eigen::MatrixXd values;  // bins x frames
    int channel_index = 0;
    std::string clip_id;
};

// Per-mel-bin mean/std over the training set.
struct GlobalNormStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;
};

inline constexpr double kStdFloor = 1e-8;

// Magnitude spectrogram (fft_size/2+1 x T) of a centered, Hann-windowed,
// reflection-padded framing with T = floor(L/hop) + 1.
Eigen::MatrixXd stft_magnitude(const Eigen::VectorXd& channel_samples, const FrontendConfig& cfg);

// Triangular HTK-mel filters, num_mel_bins x (fft_size/2+1), spanning 0 Hz..Nyquist.
Eigen::MatrixXd mel_filterbank(const FrontendConfig& cfg);

// Center frequencies (Hz) of the mel filters, useful for diagnostics.
Eigen::VectorXd mel_filter_centers_hz(const FrontendConfig& cfg);

// ln(mel * |STFT| + log_floor), shape num_mel_bins x T.
FbankMatrix extract_fbank(const AudioClip& clip, int channel, const FrontendConfig& cfg);

// Per-mel-bin statistics over all frames of all matrices; std floored at kStdFloor.
GlobalNormStats fit_global_stats(const std::vector<FbankMatrix>& training_features);

// (f - mean) / std per mel bin.
FbankMatrix global_normalize(const FbankMatrix& f, const GlobalNormStats& s);

// Each mel-bin row standardized over its own frames; std floored at kStdFloor.
FbankMatrix time_normalize(const FbankMatrix& f);

// mel(f) = 2595 * log10(1 + f/700)
double hz_to_mel(double hz);
double mel_to_hz(double mel);

}  // namespace samgcnn
