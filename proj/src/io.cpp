#include "ilmlab/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ilmlab {

namespace {

Json vocab_to_json(const Vocabulary& vocab) { return Json(vocab.labels); }

Vocabulary vocab_from_json(const Json& j) {
  Vocabulary v;
  v.labels = j.get<std::vector<std::string>>();
  v.validate();
  return v;
}

void require_version(const Json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("version"))
    throw ValidationError(what + ": missing version field");
  if (j.at("version").get<int>() != kFormatVersion)
    throw ValidationError(what + ": unsupported version");
}

Json rows_to_json(const PosteriorGrid& grid) {
  Json rows = Json::array();
  for (const auto& row : grid.log_rows) rows.push_back(row);
  return rows;
}

std::vector<std::vector<double>> rows_from_json(const Json& j, bool log_space) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : j) {
    auto row = r.get<std::vector<double>>();
    if (!log_space)
      for (double& p : row) {
        if (p < 0.0) throw ValidationError("negative probability in grid row");
        p = p > 0.0 ? std::log(p) : kLogZero;
      }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Json grid_to_json(const PosteriorGrid& grid, const Vocabulary& vocab) {
  return Json{{"version", kFormatVersion},
              {"vocab", vocab_to_json(vocab)},
              {"log_space", true},
              {"rows", rows_to_json(grid)}};
}

PosteriorGrid grid_from_json(const Json& j, Vocabulary* vocab) {
  require_version(j, "grid");
  Vocabulary v = vocab_from_json(j.at("vocab"));
  PosteriorGrid grid;
  grid.num_labels = v.size();
  grid.log_rows =
      rows_from_json(j.at("rows"), j.value("log_space", false));
  grid.validate();
  if (vocab) *vocab = std::move(v);
  return grid;
}

Json world_to_json(const World& world) {
  Json grids = Json::array();
  for (const auto& e : world.entries)
    grids.push_back(Json{{"prior", e.prior}, {"rows", rows_to_json(e.grid)}});
  return Json{{"version", kFormatVersion},
              {"vocab", vocab_to_json(world.vocab)},
              {"log_space", true},
              {"grids", std::move(grids)},
              {"max_len", world.max_len}};
}

World world_from_json(const Json& j) {
  require_version(j, "world");
  World world;
  world.vocab = vocab_from_json(j.at("vocab"));
  world.max_len = j.at("max_len").get<int>();
  bool log_space = j.value("log_space", false);
  for (const auto& g : j.at("grids")) {
    World::Entry e;
    e.prior = g.at("prior").get<double>();
    e.grid.num_labels = world.vocab.size();
    e.grid.log_rows = rows_from_json(g.at("rows"), log_space);
    world.entries.push_back(std::move(e));
  }
  world.validate();
  return world;
}

Json ctxlm_to_json(const CtxLM& lm, const Vocabulary& vocab) {
  Json entries = Json::array();
  for (const auto& [key, logits] : lm.table()) {
    Json ctx = Json::array();
    for (int c : key)
      if (c == kBos)
        ctx.push_back("BOS");
      else
        ctx.push_back(c);
    entries.push_back(Json{{"context", std::move(ctx)}, {"logits", logits}});
  }
  Json order = lm.context_order() == kFullContext
                   ? Json("full")
                   : Json(lm.context_order());
  return Json{{"version", kFormatVersion},
              {"vocab", vocab_to_json(vocab)},
              {"context_order", std::move(order)},
              {"models_eos", lm.models_eos()},
              {"entries", std::move(entries)}};
}

CtxLM ctxlm_from_json(const Json& j, Vocabulary* vocab) {
  require_version(j, "ctxlm");
  Vocabulary v = vocab_from_json(j.at("vocab"));
  const Json& order_j = j.at("context_order");
  int order = order_j.is_string()
                  ? (order_j.get<std::string>() == "full"
                         ? kFullContext
                         : throw ValidationError("bad context_order"))
                  : order_j.get<int>();
  CtxLM lm(v.size(), order, j.value("models_eos", true));
  for (const auto& e : j.at("entries")) {
    ContextKey key;
    for (const auto& c : e.at("context")) {
      if (c.is_string()) {
        if (c.get<std::string>() != "BOS")
          throw ValidationError("bad context element");
        key.push_back(kBos);
      } else {
        int idx = c.get<int>();
        if (idx < 0 || idx >= v.size())
          throw ValidationError("context label out of range");
        key.push_back(idx);
      }
    }
    lm.set_logits(key, e.at("logits").get<std::vector<double>>());
  }
  if (vocab) *vocab = std::move(v);
  return lm;
}

Json prior_to_json(const FramePrior& prior, const Vocabulary& vocab) {
  return Json{{"version", kFormatVersion},
              {"vocab", vocab_to_json(vocab)},
              {"probs", prior.probs}};
}

FramePrior prior_from_json(const Json& j, Vocabulary* vocab) {
  require_version(j, "frame prior");
  Vocabulary v = vocab_from_json(j.at("vocab"));
  FramePrior prior{j.at("probs").get<std::vector<double>>()};
  if (prior.num_labels() != v.size())
    throw ValidationError("frame prior width mismatch");
  prior.validate();
  if (vocab) *vocab = std::move(v);
  return prior;
}

Json recipe_to_json(const CrossDomainRecipe& r) {
  return Json{{"version", kFormatVersion},
              {"num_labels", r.num_labels},
              {"t_min", r.t_min},
              {"t_max", r.t_max},
              {"num_grids", r.num_grids},
              {"source_noise", r.source_noise},
              {"target_noise", r.target_noise},
              {"stop_prob", r.stop_prob},
              {"skew", r.skew},
              {"elm_order", r.elm_order},
              {"elm_delta", r.elm_delta},
              {"elm_corpus_size", r.elm_corpus_size},
              {"train_size", r.train_size},
              {"tune_size", r.tune_size},
              {"eval_size", r.eval_size}};
}

CrossDomainRecipe recipe_from_json(const Json& j) {
  require_version(j, "recipe");
  CrossDomainRecipe r;
  r.num_labels = j.value("num_labels", r.num_labels);
  r.t_min = j.value("t_min", r.t_min);
  r.t_max = j.value("t_max", r.t_max);
  r.num_grids = j.value("num_grids", r.num_grids);
  r.source_noise = j.value("source_noise", r.source_noise);
  r.target_noise = j.value("target_noise", r.target_noise);
  r.stop_prob = j.value("stop_prob", r.stop_prob);
  r.skew = j.value("skew", r.skew);
  r.elm_order = j.value("elm_order", r.elm_order);
  r.elm_delta = j.value("elm_delta", r.elm_delta);
  r.elm_corpus_size = j.value("elm_corpus_size", r.elm_corpus_size);
  r.train_size = j.value("train_size", r.train_size);
  r.tune_size = j.value("tune_size", r.tune_size);
  r.eval_size = j.value("eval_size", r.eval_size);
  return r;
}

Json pair_to_json(const TrainingPair& pair) {
  return Json{{"grid_id", pair.grid_id},
              {"labels", pair.labels},
              {"boundaries", pair.boundaries},
              {"weight", pair.weight}};
}

TrainingPair pair_from_json(const Json& j) {
  TrainingPair pair;
  pair.grid_id = j.at("grid_id").get<int>();
  pair.labels = j.at("labels").get<Labels>();
  pair.boundaries = j.value("boundaries", std::vector<int>{});
  pair.weight = j.value("weight", 1.0);
  return pair;
}

void save_dataset_jsonl(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const auto& pair : dataset) out << pair_to_json(pair).dump() << "\n";
}

Dataset load_dataset_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path);
  Dataset dataset;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      dataset.push_back(pair_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " +
                            e.what());
    }
  }
  return dataset;
}

void save_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << "\n";
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

void write_manifest(const std::string& path, const std::string& command,
                    const std::vector<std::string>& inputs, const Json& config,
                    const std::vector<std::string>& outputs) {
  Json in = Json::object();
  for (const auto& p : inputs) in[p] = file_hash(p);
  save_json(path, Json{{"version", kFormatVersion},
                       {"command", command},
                       {"inputs", std::move(in)},
                       {"config", config},
                       {"outputs", outputs}});
}

}  // namespace ilmlab
