#pragma once

namespace cmr::nn {

// 64-bit by default so finite-difference checks are meaningful.
#ifdef CMR_REAL_FLOAT
using Real = float;
#else
using Real = double;
#endif

}  // namespace cmr::nn
