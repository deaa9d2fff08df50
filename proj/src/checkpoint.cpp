#include <cstring>
#include <fstream>

#include "samgcnn/io_util.hpp"
#include "samgcnn/train.hpp"

namespace samgcnn {

namespace {

constexpr uint32_t kCheckpointVersion = 1;

void write_model_config(std::ostream& out, const ModelConfig& c) {
    io::write_u32(out, static_cast<uint32_t>(c.num_classes));
    io::write_u32(out, static_cast<uint32_t>(c.mel_bins));
    io::write_u32(out, static_cast<uint32_t>(c.frames));
    io::write_f32(out, static_cast<float>(c.dropout_rate));
    io::write_u32(out, static_cast<uint32_t>(c.stem_kernel_w));
    io::write_u32(out, static_cast<uint32_t>(c.stem_channels));
    io::write_u32(out, static_cast<uint32_t>(c.gated_kernel_w));
    io::write_u32(out, static_cast<uint32_t>(c.pool1));
    io::write_u32(out, static_cast<uint32_t>(c.pool2));
    io::write_u32(out, static_cast<uint32_t>(c.dense_hidden));
    io::write_u32(out, static_cast<uint32_t>(c.sam_avg_pool));
    io::write_u32(out, static_cast<uint32_t>(c.sam_max_pool));
    io::write_u8(out, c.use_attention ? 1 : 0);
}

ModelConfig read_model_config(std::istream& in) {
    ModelConfig c;
    c.num_classes = static_cast<int>(io::read_u32(in));
    c.mel_bins = static_cast<int>(io::read_u32(in));
    c.frames = static_cast<int>(io::read_u32(in));
    c.dropout_rate = io::read_f32(in);
    c.stem_kernel_w = static_cast<int>(io::read_u32(in));
    c.stem_channels = static_cast<int>(io::read_u32(in));
    c.gated_kernel_w = static_cast<int>(io::read_u32(in));
    c.pool1 = static_cast<int>(io::read_u32(in));
    c.pool2 = static_cast<int>(io::read_u32(in));
    c.dense_hidden = static_cast<int>(io::read_u32(in));
    c.sam_avg_pool = static_cast<int>(io::read_u32(in));
    c.sam_max_pool = static_cast<int>(io::read_u32(in));
    c.use_attention = io::read_u8(in) != 0;
    return c;
}

void write_bn(std::ostream& out, const BatchNormState<float>& bn) {
    io::write_u32(out, static_cast<uint32_t>(bn.channels()));
    io::write_f32(out, bn.momentum);
    io::write_f32(out, bn.epsilon);
    io::write_f32_array(out, bn.running_mean.values.data(), bn.running_mean.size());
    io::write_f32_array(out, bn.running_var.values.data(), bn.running_var.size());
}

BatchNormState<float> read_bn(std::istream& in) {
    BatchNormState<float> bn(static_cast<int>(io::read_u32(in)));
    bn.momentum = io::read_f32(in);
    bn.epsilon = io::read_f32(in);
    io::read_f32_array(in, bn.running_mean.values.data(), bn.running_mean.size());
    io::read_f32_array(in, bn.running_var.values.data(), bn.running_var.size());
    return bn;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open checkpoint for writing: " + path);
    out.write("SGC1", 4);
    io::write_u32(out, kCheckpointVersion);
    write_model_config(out, c.model_cfg);
    io::write_u32(out, static_cast<uint32_t>(c.epoch));
    io::write_f32(out, static_cast<float>(c.val_accuracy));
    io::write_u32(out, static_cast<uint32_t>(c.seed & 0xffffffffu));
    io::write_u32(out, static_cast<uint32_t>(c.seed >> 32));
    io::write_u32(out, c.config_digest);
    write_params(out, c.params);
    write_bn(out, c.bn_stem);
    write_bn(out, c.bn_gated);
    write_bn(out, c.bn_sam);
    io::write_u32(out, static_cast<uint32_t>(c.adam.step));
    io::write_f32(out, c.adam.beta1);
    io::write_f32(out, c.adam.beta2);
    io::write_f32(out, c.adam.epsilon);
    write_params(out, c.adam.first_moment);
    write_params(out, c.adam.second_moment);
    if (!out) throw DataError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SGC1", 4) != 0)
        throw FormatError("bad checkpoint magic (expected SGC1): " + path);
    const uint32_t version = io::read_u32(in);
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    Checkpoint c;
    c.model_cfg = read_model_config(in);
    c.epoch = static_cast<int>(io::read_u32(in));
    c.val_accuracy = io::read_f32(in);
    const uint64_t lo = io::read_u32(in);
    const uint64_t hi = io::read_u32(in);
    c.seed = lo | hi << 32;
    c.config_digest = io::read_u32(in);
    c.params = read_params(in);
    c.bn_stem = read_bn(in);
    c.bn_gated = read_bn(in);
    c.bn_sam = read_bn(in);
    c.adam.step = static_cast<long>(io::read_u32(in));
    c.adam.beta1 = io::read_f32(in);
    c.adam.beta2 = io::read_f32(in);
    c.adam.epsilon = io::read_f32(in);
    c.adam.first_moment = read_params(in);
    c.adam.second_moment = read_params(in);
    if (!in) throw FormatError("truncated checkpoint: " + path);
    return c;
}

}  // namespace samgcnn
