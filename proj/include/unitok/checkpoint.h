#pragma once

#include <map>
#include <string>

#include "unitok/tensor.h"

namespace unitok {

// Self-describing parameter container: a JSON header (kind, config echo,
// seed, step, hashes, tensor directory) followed by raw float32 payload.
// Writes are atomic (temp file + rename).
struct Container {
    std::string kind;          // tokenizer | denoiser | flow
    std::string config_text;   // full config echo
    std::string config_hash;
    uint64_t seed = 0;
    long long step = 0;
    std::string semantic_hash;  // frozen-encoder content hash (tokenizer kind)
    std::map<std::string, std::string> meta;
    std::map<std::string, Tensor> tensors;
};

void save_container(const std::string& path, const Container& c);
Container load_container(const std::string& path);

}  // namespace unitok
