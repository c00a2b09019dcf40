#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace unitok {

// One flat, text-serializable bag of knobs for the whole pipeline. Presets:
// "desk" runs the full test suite on CPU; "paper" records the published-scale
// hyperparameters and is documentation-grade.
struct RunConfig {
    std::string preset = "desk";
    uint64_t seed = 1234;
    int sample_rate = 16000;

    struct Mel {
        int fft = 1024;
        double hop_ms = 10.0;
        double fmin = 0.0;
        double fmax = 8000.0;
        double log_floor = 1e-5;
    };
    Mel mel;  // shared geometry; bin counts are fixed by the two presets (64/128)

    struct Model {
        int dim = 96;
        int patch_frames = 4;   // mel frames per token (100 Hz -> 25 Hz)
        int sem_layers = 4;
        int sem_heads = 4;
        double sem_mlp_ratio = 2.0;
        std::string encoder_init = "pretext";  // pretext | random
        int pretext_steps = 300;
        double pretext_lr = 1e-3;
        int pretext_batch = 16;
        int dec_blocks = 3;
        double dec_mlp_ratio = 2.0;
        int dec_kernel = 7;
        int head_fft = 1024;
    } model;

    struct Train {
        int batch = 8;
        int steps = 5000;
        double lr_max = 5e-4;
        double lr_final_frac = 0.1;
        double weight_decay = 0.01;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double lambda_sem = 45.0;
        double lambda_mel = 45.0;
        double crop_s = 1.0;
        std::string adv_form = "neg_mean";  // hinge generator: neg_mean | relu
        std::vector<int> disc_ffts = {512, 1024, 2048};
        std::vector<int> disc_channels = {8, 16, 32, 32};
        int ckpt_every = 1000;
        int threads = 0;  // 0 = hardware concurrency
    } train;

    struct Flow {
        int width = 128;
        int depth = 4;
        int heads = 4;
        double mlp_ratio = 2.0;
        int classes = 4;
        double cond_dropout = 0.1;
        int steps = 2000;
        double lr = 3e-4;
        int batch = 8;
        int sample_steps = 25;
        double cfg_scale = 5.0;
    } flow;

    struct Denoiser {
        int layers = 3;
        int heads = 4;
        double mlp_ratio = 2.0;
        int steps = 1200;
        double lr = 1e-3;
        int batch = 8;
        double snr_db = 5.0;
    } denoiser;

    struct Probe {
        double l2 = 1e-4;
        int iters = 3000;
        double lr = 0.05;
    } probe;

    struct Eval {
        std::vector<int> mel_ffts = {32, 64, 128, 256, 512, 1024, 2048};
        std::vector<int> mel_bins = {5, 10, 20, 40, 80, 160, 320};
        std::vector<int> stft_ffts = {512, 1024, 2048};
    } eval;
};

RunConfig preset_config(const std::string& name);  // desk | paper

std::string serialize_config(const RunConfig& c);
RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);
void save_config_file(const std::string& path, const RunConfig& c);

// FNV-1a over the canonical serialization.
uint64_t config_hash(const RunConfig& c);
std::string config_hash_hex(const RunConfig& c);

// Decoder ISTFT-head hop implied by the 25 -> 50 Hz frame-rate contract.
int head_hop(const RunConfig& c);
// Latent frames per second (tokens at 25 Hz for the shipped presets).
double token_rate(const RunConfig& c);
// Samples per latent frame (640 at 16 kHz).
int samples_per_token(const RunConfig& c);

// Capacity-preserving depth for a width change: depth * (w_old/w_new)^2,
// rounded. Reproduces the published 1024->1532 / 24->11 resizing.
int rescale_depth(int base_width, int base_depth, int new_width);

}  // namespace unitok
