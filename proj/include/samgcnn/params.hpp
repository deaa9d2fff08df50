#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

#include "samgcnn/tensor.hpp"

namespace samgcnn {

// Named parameter store. Values and gradient accumulators live here;
// tape leaves are created from (and gradients flushed back into) this set.
template <typename Scalar>
class ParamSet {
  public:
    Tensor<Scalar>& add(const std::string& name, Tensor<Scalar> value) {
        auto [it, inserted] = params_.emplace(name, Entry{std::move(value), {}});
        if (!inserted) throw ConfigError("duplicate parameter name: " + name);
        it->second.grad = zeros_like(it->second.value);
        return it->second.value;
    }

    Tensor<Scalar>& value(const std::string& name) { return entry(name).value; }
    const Tensor<Scalar>& value(const std::string& name) const { return entry(name).value; }
    Tensor<Scalar>& grad(const std::string& name) { return entry(name).grad; }

    bool contains(const std::string& name) const { return params_.count(name) != 0; }
    size_t size() const { return params_.size(); }

    void zero_grads() {
        for (auto& [name, e] : params_) e.grad.values.setZero();
    }

    template <typename Fn>
    void for_each(Fn&& fn) {  // name, value tensor, grad tensor; sorted by name
        for (auto& [name, e] : params_) fn(name, e.value, e.grad);
    }
    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (const auto& [name, e] : params_) fn(name, e.value, e.grad);
    }

    template <typename Other>
    ParamSet<Other> cast() const {
        ParamSet<Other> out;
        for (const auto& [name, e] : params_) out.add(name, e.value.template cast<Other>());
        return out;
    }

  private:
    struct Entry {
        Tensor<Scalar> value;
        Tensor<Scalar> grad;
    };
    Entry& entry(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
        return it->second;
    }
    const Entry& entry(const std::string& name) const {
        auto it = params_.find(name);
        if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
        return it->second;
    }
    std::map<std::string, Entry> params_;
};

// "SGW1" parameter block: magic, u32 count, then per parameter
// u16 name length, name bytes, u8 rank, u32 dims, float32 payload.
// Little-endian throughout.
void write_params(std::ostream& out, const ParamSet<float>& params);
ParamSet<float> read_params(std::istream& in);

}  // namespace samgcnn
