#pragma once

#include <string>

#include <json.hpp>

#include "ilmlab/ctxlm.hpp"
#include "ilmlab/decoder.hpp"
#include "ilmlab/ilm.hpp"
#include "ilmlab/world.hpp"
#include "ilmlab/worldgen.hpp"

namespace ilmlab {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

Json grid_to_json(const PosteriorGrid& grid, const Vocabulary& vocab);
PosteriorGrid grid_from_json(const Json& j, Vocabulary* vocab = nullptr);

Json world_to_json(const World& world);
World world_from_json(const Json& j);

Json ctxlm_to_json(const CtxLM& lm, const Vocabulary& vocab);
CtxLM ctxlm_from_json(const Json& j, Vocabulary* vocab = nullptr);

Json prior_to_json(const FramePrior& prior, const Vocabulary& vocab);
FramePrior prior_from_json(const Json& j, Vocabulary* vocab = nullptr);

// Cross-domain recipe knobs; missing keys keep their defaults.
Json recipe_to_json(const CrossDomainRecipe& recipe);
CrossDomainRecipe recipe_from_json(const Json& j);

Json pair_to_json(const TrainingPair& pair);
TrainingPair pair_from_json(const Json& j);

void save_dataset_jsonl(const std::string& path, const Dataset& dataset);
Dataset load_dataset_jsonl(const std::string& path);

void save_json(const std::string& path, const Json& j);
Json load_json(const std::string& path);

// FNV-1a 64-bit content hash, hex-encoded; used in run manifests.
std::string file_hash(const std::string& path);

// Run manifest written next to each command's primary output: the
// command, content hashes of every input, the effective config, and the
// produced files. Re-running with the same manifest inputs reproduces
// the outputs bit for bit.
void write_manifest(const std::string& path, const std::string& command,
                    const std::vector<std::string>& inputs, const Json& config,
                    const std::vector<std::string>& outputs);

}  // namespace ilmlab
