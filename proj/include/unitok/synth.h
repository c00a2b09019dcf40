#pragma once

#include <string>

#include "unitok/dsp.h"
#include "unitok/manifest.h"
#include "unitok/rng.h"

namespace unitok {

// Built-in synthetic corpora so the whole pipeline runs without downloads.
// Kinds:
//   "probe"  - tone + envelope + noise color + click events; labels carry the
//              four probe tasks (pitch 8-way, env 4-way, color 3-way, count 4-way)
//   "flow4"  - four clearly distinct sound families, label class:{0..3}
//   "speech" - harmonic, formant-shaped, syllable-modulated clean signals
//   "noise"  - shaped noise bank (for SE mixing)
struct SynthOptions {
    std::string kind = "probe";
    int count = 60;
    double dur_s = 1.5;
    int sample_rate = 16000;
    uint64_t seed = 1;
};

Manifest generate_corpus(const std::string& out_dir, const SynthOptions& opt);

// Single-clip generators (deterministic given the rng state).
Waveform synth_probe_clip(Rng& rng, int sr, double dur_s, std::string* label_out);
Waveform synth_flow4_clip(Rng& rng, int sr, double dur_s, int cls);
Waveform synth_speechlike(Rng& rng, int sr, double dur_s);
Waveform synth_noise_clip(Rng& rng, int sr, double dur_s, int color);

}  // namespace unitok
