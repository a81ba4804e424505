#pragma once

#include "seb/kernels.hpp"

namespace seb::kernels::detail {

#if defined(SEB_HAVE_AVX2)
const KernelTable& avx2_table_unchecked();
#endif

}  // namespace seb::kernels::detail
