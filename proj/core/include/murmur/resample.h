#pragma once

#include <span>
#include <vector>

#include "murmur/types.h"

namespace murmur {

// Band-limited sample-rate conversion with a polyphase Kaiser-windowed sinc.
//
// The kernel is designed at the lower of the two rates: cutoff is
// 0.45 * min(src, dst) and the kernel spans 64 zero-crossing intervals of that
// rate, so each output sample draws on 64 * max(1, src/dst) input samples.
// Output length is round(n * dst / src). Equal rates return the input as-is.
std::vector<double> resample(std::span<const double> samples, double src_rate,
                             double dst_rate = kPoolRate);

}  // namespace murmur
