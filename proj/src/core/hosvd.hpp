// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>

#include "core/svd.hpp"
#include "core/tensor3.hpp"

namespace khan {

// Tucker decomposition t ~= core x1 U1 x2 U2 x3 U3.
struct TuckerResult {
  Tensor3 core;
  Mat U1, U2, U3;
};

// Ranks per mode; nullopt means "numerically full": keep singular values at
// or above 1e-10 times the largest one of that unfolding.
using TuckerRanks = std::optional<std::array<std::size_t, 3>>;

// Higher-order SVD: factor n is the leading left singular block of the
// mode-n unfolding; the core is the tensor contracted with the transposes.
TuckerResult hosvd(const Tensor3& t, const TuckerRanks& ranks = std::nullopt);

Tensor3 tucker_reconstruct(const TuckerResult& d);

}  // namespace khan
