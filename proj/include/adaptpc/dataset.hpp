#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adaptpc/error.hpp"

namespace adaptpc {

/// N input points (rows of inputs, in R^d) with N scalar observations.
struct Dataset {
    Eigen::MatrixXd inputs;
    Eigen::VectorXd outputs;

    Dataset() = default;
    Dataset(Eigen::MatrixXd x, Eigen::VectorXd u) : inputs(std::move(x)), outputs(std::move(u)) {
        if (inputs.rows() != outputs.size())
            throw ArgumentError("Dataset: " + std::to_string(inputs.rows()) + " input rows but " + std::to_string(outputs.size()) +
                                " outputs");
    }

    Eigen::Index size() const noexcept { return outputs.size(); }
    Eigen::Index dimension() const noexcept { return inputs.cols(); }

    Dataset subset(const std::vector<Eigen::Index>& rows) const {
        Dataset out;
        out.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
        out.outputs.resize(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t k = 0; k < rows.size(); ++k) {
            out.inputs.row(static_cast<Eigen::Index>(k)) = inputs.row(rows[k]);
            out.outputs(static_cast<Eigen::Index>(k)) = outputs(rows[k]);
        }
        return out;
    }
};

} // namespace adaptpc
