#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "unitok/config.h"
#include "unitok/error.h"
#include "unitok/rng.h"

namespace unitok {

namespace {

struct Field {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

std::string fmt_double(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

std::string fmt_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::vector<int> parse_ints(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ','))
        if (!part.empty()) out.push_back(std::stoi(part));
    return out;
}

#define F_STR(key, expr)                                                             \
    {key, [](const RunConfig& c) { return c.expr; },                                \
     [](RunConfig& c, const std::string& v) { c.expr = v; }}
#define F_INT(key, expr)                                                             \
    {key, [](const RunConfig& c) { return std::to_string(c.expr); },                \
     [](RunConfig& c, const std::string& v) { c.expr = std::stoi(v); }}
#define F_U64(key, expr)                                                             \
    {key, [](const RunConfig& c) { return std::to_string(c.expr); },                \
     [](RunConfig& c, const std::string& v) { c.expr = std::stoull(v); }}
#define F_DBL(key, expr)                                                             \
    {key, [](const RunConfig& c) { return fmt_double(c.expr); },                    \
     [](RunConfig& c, const std::string& v) { c.expr = std::stod(v); }}
#define F_VEC(key, expr)                                                             \
    {key, [](const RunConfig& c) { return fmt_ints(c.expr); },                      \
     [](RunConfig& c, const std::string& v) { c.expr = parse_ints(v); }}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        F_STR("preset", preset),
        F_U64("seed", seed),
        F_INT("sample_rate", sample_rate),
        F_INT("mel.fft", mel.fft),
        F_DBL("mel.hop_ms", mel.hop_ms),
        F_DBL("mel.fmin", mel.fmin),
        F_DBL("mel.fmax", mel.fmax),
        F_DBL("mel.log_floor", mel.log_floor),
        F_INT("model.dim", model.dim),
        F_INT("model.patch_frames", model.patch_frames),
        F_INT("model.sem_layers", model.sem_layers),
        F_INT("model.sem_heads", model.sem_heads),
        F_DBL("model.sem_mlp_ratio", model.sem_mlp_ratio),
        F_STR("model.encoder_init", model.encoder_init),
        F_INT("model.pretext_steps", model.pretext_steps),
        F_DBL("model.pretext_lr", model.pretext_lr),
        F_INT("model.pretext_batch", model.pretext_batch),
        F_INT("model.dec_blocks", model.dec_blocks),
        F_DBL("model.dec_mlp_ratio", model.dec_mlp_ratio),
        F_INT("model.dec_kernel", model.dec_kernel),
        F_INT("model.head_fft", model.head_fft),
        F_INT("train.batch", train.batch),
        F_INT("train.steps", train.steps),
        F_DBL("train.lr_max", train.lr_max),
        F_DBL("train.lr_final_frac", train.lr_final_frac),
        F_DBL("train.weight_decay", train.weight_decay),
        F_DBL("train.beta1", train.beta1),
        F_DBL("train.beta2", train.beta2),
        F_DBL("train.lambda_sem", train.lambda_sem),
        F_DBL("train.lambda_mel", train.lambda_mel),
        F_DBL("train.crop_s", train.crop_s),
        F_STR("train.adv_form", train.adv_form),
        F_VEC("train.disc_ffts", train.disc_ffts),
        F_VEC("train.disc_channels", train.disc_channels),
        F_INT("train.ckpt_every", train.ckpt_every),
        F_INT("train.threads", train.threads),
        F_INT("flow.width", flow.width),
        F_INT("flow.depth", flow.depth),
        F_INT("flow.heads", flow.heads),
        F_DBL("flow.mlp_ratio", flow.mlp_ratio),
        F_INT("flow.classes", flow.classes),
        F_DBL("flow.cond_dropout", flow.cond_dropout),
        F_INT("flow.steps", flow.steps),
        F_DBL("flow.lr", flow.lr),
        F_INT("flow.batch", flow.batch),
        F_INT("flow.sample_steps", flow.sample_steps),
        F_DBL("flow.cfg_scale", flow.cfg_scale),
        F_INT("denoiser.layers", denoiser.layers),
        F_INT("denoiser.heads", denoiser.heads),
        F_DBL("denoiser.mlp_ratio", denoiser.mlp_ratio),
        F_INT("denoiser.steps", denoiser.steps),
        F_DBL("denoiser.lr", denoiser.lr),
        F_INT("denoiser.batch", denoiser.batch),
        F_DBL("denoiser.snr_db", denoiser.snr_db),
        F_DBL("probe.l2", probe.l2),
        F_INT("probe.iters", probe.iters),
        F_DBL("probe.lr", probe.lr),
        F_VEC("eval.mel_ffts", eval.mel_ffts),
        F_VEC("eval.mel_bins", eval.mel_bins),
        F_VEC("eval.stft_ffts", eval.stft_ffts),
    };
    return table;
}

#undef F_STR
#undef F_INT
#undef F_U64
#undef F_DBL
#undef F_VEC

void validate_config(const RunConfig& c) {
    if (c.sample_rate <= 0) throw ConfigError("config: sample_rate must be positive");
    if (c.model.dim <= 0 || c.model.dim % c.model.sem_heads != 0)
        throw ConfigError("config: model.dim must be positive and divisible by sem_heads");
    if (c.model.patch_frames <= 0) throw ConfigError("config: patch_frames must be positive");
    if (c.train.lambda_sem < 0 || c.train.lambda_mel < 0)
        throw ConfigError("config: loss weights must be non-negative");
    if (c.train.adv_form != "neg_mean" && c.train.adv_form != "relu")
        throw ConfigError("config: train.adv_form must be neg_mean or relu");
    if (c.model.encoder_init != "pretext" && c.model.encoder_init != "random")
        throw ConfigError("config: model.encoder_init must be pretext or random");
    if (c.train.disc_ffts.size() < 2)
        throw ConfigError("config: need at least two discriminator resolutions");
    if (c.train.disc_channels.size() < 2)
        throw ConfigError("config: need at least two discriminator conv layers");
    if (int(c.sample_rate) % int(2 * token_rate(c)) != 0)
        throw ConfigError("config: sample_rate must be divisible by twice the token rate");
}

}  // namespace

RunConfig preset_config(const std::string& name) {
    RunConfig c;
    if (name == "desk") {
        c.preset = "desk";
    } else if (name == "paper") {
        c.preset = "paper";
        c.model.dim = 1280;
        c.model.sem_layers = 32;
        c.model.sem_heads = 16;
        c.model.sem_mlp_ratio = 4.0;
        c.model.dec_blocks = 12;
        c.model.dec_mlp_ratio = 3.0;
        c.train.batch = 256;
        c.train.steps = 1000000;
        c.train.lr_max = 5e-4;
        c.flow.width = 1532;
        c.flow.depth = 11;
        c.flow.heads = 4;
        c.flow.sample_steps = 25;
        c.flow.cfg_scale = 5.0;
    } else {
        throw ConfigError("unknown preset: " + name);
    }
    validate_config(c);
    return c;
}

std::string serialize_config(const RunConfig& c) {
    std::string out;
    for (const auto& f : fields()) out += f.key + " = " + f.get(c) + "\n";
    return out;
}

RunConfig parse_config(const std::string& text) {
    // preset first (it resets defaults), then every other key in file order
    std::string preset = "desk";
    std::istringstream scan(text);
    std::string line;
    while (std::getline(scan, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        if (trim(line.substr(0, eq)) == "preset") preset = trim(line.substr(eq + 1));
    }
    RunConfig c = preset_config(preset);

    std::istringstream in(text);
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        if (key == "preset") continue;
        bool found = false;
        for (const auto& f : fields()) {
            if (f.key == key) {
                try {
                    f.set(c, val);
                } catch (const std::exception&) {
                    throw ConfigError("config line " + std::to_string(lineno) + ": bad value for " + key);
                }
                found = true;
                break;
            }
        }
        if (!found) throw ConfigError("config line " + std::to_string(lineno) + ": unknown key " + key);
    }
    validate_config(c);
    return c;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError(path + ": cannot open config");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

void save_config_file(const std::string& path, const RunConfig& c) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError(path + ": cannot open config for write");
    f << serialize_config(c);
}

uint64_t config_hash(const RunConfig& c) { return rngdetail::fnv1a64(serialize_config(c)); }

std::string config_hash_hex(const RunConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(c)));
    return std::string(buf);
}

double token_rate(const RunConfig& c) {
    const double mel_rate = 1000.0 / c.mel.hop_ms;
    return mel_rate / c.model.patch_frames;  // 25 Hz for the shipped presets
}

int samples_per_token(const RunConfig& c) {
    return int(std::lround(c.sample_rate / token_rate(c)));
}

int head_hop(const RunConfig& c) {
    // decoder runs at twice the token rate after the transposed-conv upsample
    return int(std::lround(c.sample_rate / (2.0 * token_rate(c))));
}

int rescale_depth(int base_width, int base_depth, int new_width) {
    if (base_width <= 0 || base_depth <= 0 || new_width <= 0)
        throw ConfigError("rescale_depth: sizes must be positive");
    const double d = double(base_depth) * double(base_width) * base_width /
                     (double(new_width) * new_width);
    return std::max(1, int(std::lround(d)));
}

}  // namespace unitok
