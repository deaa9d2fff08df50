#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "samgcnn/common.hpp"

namespace samgcnn {

// One multi-channel audio clip, samples in [-1, 1].
struct AudioClip {
    std::vector<Eigen::VectorXd> samples;  // one vector per channel, equal lengths
    int sample_rate = 0;
    std::string clip_id;
    int label = -1;  // class index, -1 when unlabeled

    int num_channels() const { return static_cast<int>(samples.size()); }
    Eigen::Index num_samples() const { return samples.empty() ? 0 : samples[0].size(); }
};

// Reads a RIFF/WAVE file with 16-bit signed PCM, 1..4 channels.
// Sample values are scaled by 1/32768.
AudioClip load_wav(const std::string& path);

// Writes a 16-bit PCM WAV. Values are clamped to [-1, 1] and scaled by 32767.
void save_wav(const std::string& path, const AudioClip& clip);

}  // namespace samgcnn
