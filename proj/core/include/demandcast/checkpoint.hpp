#pragma once

#include "demandcast/tensor.hpp"

#include <map>
#include <string>
#include <vector>

namespace demandcast {

// Flat binary model container: magic + format version + model name, then one
// record per tensor (name, shape, little-endian float64 buffer). Every model
// pairs one of these with a JSON manifest of its hyperparameters.
void save_checkpoint(const std::string& path, const std::string& model_name,
                     const std::vector<ad::Tensor>& tensors);

struct LoadedCheckpoint {
	std::string model_name;
	std::map<std::string, ad::Tensor> tensors;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace demandcast
