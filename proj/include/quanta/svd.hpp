// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "quanta/error.hpp"
#include "quanta/matrix.hpp"

namespace quanta {

struct SvdResult {
    std::vector<double> singular_values;  // descending
    Matrix v;                             // right singular vectors as columns, thin
};

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                          Eigen::RowMajor>>(m.data.data(),
                                                            static_cast<Eigen::Index>(m.rows),
                                                            static_cast<Eigen::Index>(m.cols));
}

inline SvdResult svd(const Matrix& m, bool want_right_vectors = false) {
    if (!all_finite(m.data)) throw NumericalError("svd: non-finite entries");
    const Eigen::MatrixXd em = to_eigen(m);
    const unsigned options = want_right_vectors ? static_cast<unsigned>(Eigen::ComputeThinV) : 0u;
    Eigen::BDCSVD<Eigen::MatrixXd> solver(em, options);
    SvdResult r;
    r.singular_values.assign(solver.singularValues().data(),
                             solver.singularValues().data() + solver.singularValues().size());
    if (want_right_vectors) {
        const Eigen::MatrixXd& v = solver.matrixV();
        r.v = Matrix(static_cast<std::size_t>(v.rows()), static_cast<std::size_t>(v.cols()));
        for (Eigen::Index i = 0; i < v.rows(); ++i)
            for (Eigen::Index j = 0; j < v.cols(); ++j)
                r.v.data[static_cast<std::size_t>(i) * r.v.cols +
                         static_cast<std::size_t>(j)] = v(i, j);
    }
    return r;
}

inline std::vector<double> singular_values(const Matrix& m) {
    return svd(m, false).singular_values;
}

}  // namespace quanta
