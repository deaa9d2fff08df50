#include "samgcnn/params.hpp"

#include <cstring>
#include <istream>
#include <ostream>

#include "samgcnn/io_util.hpp"

namespace samgcnn {

void write_params(std::ostream& out, const ParamSet<float>& params) {
    out.write("SGW1", 4);
    io::write_u32(out, static_cast<uint32_t>(params.size()));
    params.for_each([&](const std::string& name, const Tensor<float>& value,
                        const Tensor<float>&) {
        if (name.size() > 0xffff) throw ConfigError("parameter name too long: " + name);
        io::write_u16(out, static_cast<uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        io::write_u8(out, static_cast<uint8_t>(value.rank()));
        for (int d : value.shape) io::write_u32(out, static_cast<uint32_t>(d));
        io::write_f32_array(out, value.values.data(), value.size());
    });
    if (!out) throw DataError("parameter write failed");
}

ParamSet<float> read_params(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SGW1", 4) != 0)
        throw FormatError("bad parameter block magic (expected SGW1)");
    const uint32_t count = io::read_u32(in);
    ParamSet<float> params;
    for (uint32_t i = 0; i < count; ++i) {
        const uint16_t name_len = io::read_u16(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const uint8_t rank = io::read_u8(in);
        std::vector<int> shape(rank);
        for (auto& d : shape) d = static_cast<int>(io::read_u32(in));
        Tensor<float> t(shape);
        io::read_f32_array(in, t.values.data(), t.size());
        if (!in) throw FormatError("truncated parameter block");
        params.add(name, std::move(t));
    }
    return params;
}

}  // namespace samgcnn
