#pragma once

#include "echogaze/frame_config.hpp"

#include <vector>

namespace echogaze {

// One frame of the linear up-chirp for `band`: unit amplitude, zero initial
// phase, instantaneous frequency sweeping f_start -> f_end over frame_len
// samples. phase(n) = 2*pi*(f_start*n/fs + (f_end-f_start)*n^2/(2*frame_len*fs)).
std::vector<double> generate_chirp(const ChirpBand& band, const FrameConfig& cfg);

} // namespace echogaze
