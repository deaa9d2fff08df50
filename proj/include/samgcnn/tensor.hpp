#pragma once

#include <initializer_list>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "samgcnn/common.hpp"

namespace samgcnn {

// Dense n-dimensional array, row-major flat storage.
template <typename Scalar>
struct Tensor {
    using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

    std::vector<int> shape;
    Array values;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        values = Array::Zero(count(shape));
    }
    Tensor(std::vector<int> s, Array v) : shape(std::move(s)), values(std::move(v)) {
        if (values.size() != count(shape)) throw ShapeError("tensor value count != shape product");
    }

    static Eigen::Index count(const std::vector<int>& s) {
        Eigen::Index n = 1;
        for (int d : s) {
            if (d < 0) throw ShapeError("negative dimension");
            n *= d;
        }
        return n;
    }

    Eigen::Index size() const { return values.size(); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }

    Scalar& operator[](Eigen::Index i) { return values[i]; }
    Scalar operator[](Eigen::Index i) const { return values[i]; }

    // Row-major matrix view for tensors interpreted as [rows, cols].
    auto matrix(Eigen::Index rows, Eigen::Index cols) {
        return Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            values.data(), rows, cols);
    }
    auto matrix(Eigen::Index rows, Eigen::Index cols) const {
        return Eigen::Map<
            const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            values.data(), rows, cols);
    }

    template <typename Other>
    Tensor<Other> cast() const {
        return Tensor<Other>(shape, values.template cast<Other>());
    }
};

inline bool same_shape(const std::vector<int>& a, const std::vector<int>& b) { return a == b; }

template <typename Scalar>
Tensor<Scalar> zeros_like(const Tensor<Scalar>& t) {
    return Tensor<Scalar>(t.shape);
}

}  // namespace samgcnn
