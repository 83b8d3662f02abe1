#pragma once

#include <map>
#include <string>

#include "fgl/autograd.hpp"

namespace fgl::nn {

// Checkpoint layout: "FGL1" magic, little-endian u64 JSON index length, the
// JSON index, then the raw little-endian float64 payload. The index records
// {name, shape, offset} per tensor with byte offsets into the payload.
void save_checkpoint(const std::string& path, const Params& params);

// Loads values into matching parameters by name. Every parameter in `params`
// must be present in the file with the same shape; extra tensors in the file
// are ignored (a bridge checkpoint restores a bare FL-Expert this way).
void load_checkpoint(const std::string& path, Params& params);

// Raw read, used by tools and tests.
std::map<std::string, Tensor> read_checkpoint(const std::string& path);

}  // namespace fgl::nn
