#pragma once

// Blind restoration of grayscale images degraded by spatially varying
// illumination and motion blur: non-local Retinex correction, a
// non-subsampled shearlet filter bank, structure-adaptive TGV^2, and a
// patch-wise ADMM solver, plus a synthetic degradation and metrics harness.

#include "blindrestore/config.hpp"
#include "blindrestore/convolve.hpp"
#include "blindrestore/degrade.hpp"
#include "blindrestore/errors.hpp"
#include "blindrestore/fft.hpp"
#include "blindrestore/grid.hpp"
#include "blindrestore/image.hpp"
#include "blindrestore/image_io.hpp"
#include "blindrestore/metrics.hpp"
#include "blindrestore/parallel.hpp"
#include "blindrestore/patch.hpp"
#include "blindrestore/retinex.hpp"
#include "blindrestore/shearlet.hpp"
#include "blindrestore/solver.hpp"
#include "blindrestore/tgv.hpp"
