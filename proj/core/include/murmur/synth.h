#pragma once

#include <cstdint>

#include "murmur/types.h"

namespace murmur {

// Synthetic phonocardiogram at 2000 Hz for dataset-free testing.
//
// Heart rate is drawn from 60-100 bpm; each cycle holds S1 (30-80 Hz) and S2
// (50-120 Hz) as Gaussian-enveloped tone bursts of 50-100 ms, with S2 one
// systole (about a third of the cycle) after S1. The murmur class adds
// 150-600 Hz band-limited noise spanning the systolic gap with an RMS of
// 20-50% of the S1 peak. White noise is added at 20 dB SNR.
//
// id and subject are "synth_<label>_<seed>"; source is kSynthetic.
// Throws ArgumentError when duration_s < 2.
Recording synth_pcg(Label label, double duration_s, std::uint64_t seed);

}  // namespace murmur
