#pragma once

#include "unitok/autograd.h"
#include "unitok/dsp.h"

namespace unitok {

// Differentiable DSP ops on the tape. Forward paths match the plain dsp
// functions bit-for-bit (same padding, windows, filterbank); adjoints go
// through the inverse/forward FFT pair.

// log(max(fbank * |STFT|, floor)) of a waveform node -> (t_mel, bins).
NodeId log_mel_node(Tape& t, NodeId wave, const MelConfig& cfg);

// log(max(|STFT|, floor)) with the stft() center padding -> (frames, fft/2+1).
NodeId log_mag_stft_node(Tape& t, NodeId wave, int fft_size, int hop, float floor_ = 1e-5f);

// WOLA synthesis from (frames, fft/2+1) re/im nodes; crops
// [crop_start, crop_start + out_len) of the overlap-add buffer.
NodeId istft_synth_node(Tape& t, NodeId re, NodeId im, int fft_size, int hop, int crop_start,
                        int out_len);

}  // namespace unitok
