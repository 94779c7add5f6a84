#pragma once

#include "tvec/kernels.hpp"

namespace tvec::kernels::detail {

extern const KernelTable kScalarTable;

// Defined only on x86-64 builds.
const KernelTable* avx2_table_if_compiled();

}  // namespace tvec::kernels::detail
