// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "qlsc/kernels.hpp"

namespace qlsc::kernels::detail {

// Defined in per-ISA translation units; return nullptr when the ISA was not
// compiled in.
const KernelTable* avx2_table();
const KernelTable* neon_table();

}  // namespace qlsc::kernels::detail
