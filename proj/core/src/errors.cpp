#include "tlfusion/errors.hpp"

#include <fmt/format.h>

namespace tlfusion {

ExtrapolationError::ExtrapolationError(double t, double span_begin, double span_end)
    : Error("extrapolation_refused",
            fmt::format("pose query t={:.6f} outside buffer span [{:.6f}, {:.6f}]", t,
                        span_begin, span_end)),
      query_(t),
      span_begin_(span_begin),
      span_end_(span_end) {}

BehindCameraError::BehindCameraError(double z)
    : Error("behind_camera", fmt::format("point depth z={} is not in front of the camera", z)) {}

PoseCoverageError::PoseCoverageError(double t)
    : Error("pose_coverage", fmt::format("no pose coverage for detection timestamp t={:.6f}", t)),
      timestamp_(t) {}

}  // namespace tlfusion
