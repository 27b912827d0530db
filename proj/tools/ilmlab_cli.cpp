#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ilmlab/io.hpp"
#include "ilmlab/train.hpp"
#include "ilmlab/tuning.hpp"
#include "ilmlab/verify.hpp"
#include "ilmlab/worldgen.hpp"

namespace {

using namespace ilmlab;

// Fill flag defaults from the per-command section of the config file;
// explicit command-line values always win.
void apply_config(CLI::App* cmd, const Json& cfg) {
  if (!cfg.is_object()) return;
  auto section = cfg.find(cmd->get_name());
  if (section == cfg.end() || !section->is_object()) return;
  for (const auto& [key, value] : section->items()) {
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (!opt || opt->count() > 0) continue;
    std::vector<std::string> vals;
    if (value.is_array())
      for (const auto& v : value) vals.push_back(v.dump());
    else
      vals.push_back(value.is_string() ? value.get<std::string>()
                                       : value.dump());
    opt->add_result(vals.front());
    for (size_t i = 1; i < vals.size(); ++i) opt->add_result(vals[i]);
    opt->run_callback();
  }
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(std::stod(tok));
  if (out.empty()) throw ValidationError("empty scale grid: " + csv);
  return out;
}

MaskPolicy parse_mask_policy(const std::string& name,
                             const std::string& prior_path) {
  if (name == "uniform") return MaskPolicy::uniform();
  if (name == "blank") return MaskPolicy::blank();
  if (name == "prior") {
    if (prior_path.empty())
      throw ValidationError("mask policy 'prior' needs --prior");
    return MaskPolicy::from_prior(prior_from_json(load_json(prior_path)));
  }
  throw ValidationError("unknown mask policy: " + name);
}

struct DecodedLine {
  int grid_id;
  Labels ref, hyp;
  double log_score;
};

int run(int argc, char** argv) {
  CLI::App app{"Desk-scale lab for CTC internal language model estimation "
               "and fused decoding"};
  app.require_subcommand(1);

  std::string config_path;
  if (const char* env = std::getenv("ILMLAB_CONFIG")) config_path = env;
  app.add_option("--config", config_path,
                 "JSON config file with per-command defaults");

  // gen-world
  auto* gen = app.add_subcommand("gen-world", "generate a synthetic world");
  WorldSpec wspec;
  std::string out_path;
  gen->add_option("--vocab-size", wspec.num_labels);
  gen->add_option("--t-min", wspec.t_min);
  gen->add_option("--t-max", wspec.t_max);
  gen->add_option("--grids", wspec.num_grids);
  gen->add_option("--concentration", wspec.concentration);
  gen->add_option("--seed", wspec.seed);
  gen->add_option("--max-len", wspec.max_len);
  gen->add_option("--out", out_path)->required();

  // sample-data
  auto* sample = app.add_subcommand("sample-data", "sample training pairs");
  std::string world_path;
  int n_samples = 100;
  std::uint64_t seed = 1;
  sample->add_option("--world", world_path)->required();
  sample->add_option("--n", n_samples);
  sample->add_option("--seed", seed);
  sample->add_option("--out", out_path)->required();

  // estimate-prior
  auto* prior_cmd =
      app.add_subcommand("estimate-prior", "frame-level prior, plus the "
                                           "renormalized unigram on request");
  std::string data_path, unigram_out;
  prior_cmd->add_option("--world", world_path)->required();
  prior_cmd->add_option("--data", data_path)->required();
  prior_cmd->add_option("--out", out_path)->required();
  prior_cmd->add_option("--unigram-out", unigram_out);

  // train-ilm
  auto* train_cmd = app.add_subcommand("train-ilm", "train an ILM estimator");
  std::string criterion = "label", mode = "sampled", context_order = "full";
  std::string mask_policy = "uniform", prior_path, snapshot_dir;
  TrainConfig tcfg;
  train_cmd->add_option("--world", world_path)->required();
  train_cmd->add_option("--data", data_path);
  train_cmd->add_option("--criterion", criterion)
      ->check(CLI::IsMember({"label", "label_smoothed", "label_masked", "seq",
                             "ce"}));
  train_cmd->add_option("--mode", mode)
      ->check(CLI::IsMember({"sampled", "exact_expectation"}));
  train_cmd->add_option("--context-order", context_order,
                        "'full' or a non-negative integer");
  train_cmd->add_option("--alpha", tcfg.alpha);
  train_cmd->add_option("--p-mask", tcfg.p_mask);
  train_cmd->add_option("--mask-policy", mask_policy)
      ->check(CLI::IsMember({"uniform", "blank", "prior"}));
  train_cmd->add_option("--prior", prior_path);
  train_cmd->add_option("--step-size", tcfg.step_size);
  train_cmd->add_option("--epochs", tcfg.epochs);
  train_cmd->add_option("--batch-size", tcfg.batch_size);
  train_cmd->add_option("--seed", tcfg.seed);
  train_cmd->add_option("--snapshot-period", tcfg.snapshot_period);
  train_cmd->add_option("--exact-tolerance", tcfg.exact_tolerance);
  train_cmd->add_option("--snapshot-dir", snapshot_dir);
  train_cmd->add_option("--out", out_path)->required();

  // make-elm
  auto* elm_cmd = app.add_subcommand("make-elm", "count LM from a dataset");
  int elm_order = 1;
  double elm_delta = 0.5;
  elm_cmd->add_option("--world", world_path)->required();
  elm_cmd->add_option("--data", data_path)->required();
  elm_cmd->add_option("--order", elm_order);
  elm_cmd->add_option("--delta", elm_delta);
  elm_cmd->add_option("--out", out_path)->required();

  // decode
  auto* dec_cmd = app.add_subcommand("decode", "fused decoding of a dataset");
  std::string elm_path, ilm_path, dec_mode = "viterbi_max", summary_path;
  FusionScales scales;
  scales.beam = 16;
  dec_cmd->add_option("--world", world_path)->required();
  dec_cmd->add_option("--data", data_path)->required();
  dec_cmd->add_option("--elm", elm_path);
  dec_cmd->add_option("--ilm", ilm_path);
  dec_cmd->add_option("--prior", prior_path);
  dec_cmd->add_option("--lambda1", scales.lambda1);
  dec_cmd->add_option("--lambda2", scales.lambda2);
  dec_cmd->add_option("--lambda3", scales.lambda3);
  dec_cmd->add_option("--mode", dec_mode)
      ->check(CLI::IsMember({"viterbi_max", "full_sum"}));
  dec_cmd->add_option("--beam", scales.beam, "0 = exhaustive");
  dec_cmd->add_flag("--no-lm-eos", [&scales](std::int64_t) {
    scales.lm_eos = false;
  });
  dec_cmd->add_option("--out", out_path)->required();
  dec_cmd->add_option("--summary", summary_path);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "perplexity or LER aggregation");
  std::string model_path, report_path;
  bool do_ppl = false;
  double log_floor = -30.0;
  eval_cmd->add_flag("--ppl", do_ppl, "evaluate model perplexity on --data");
  eval_cmd->add_option("--model", model_path);
  eval_cmd->add_option("--data", data_path);
  eval_cmd->add_option("--report", report_path,
                       "decode report to aggregate into a corpus LER");
  eval_cmd->add_option("--log-floor", log_floor);

  // tune-scales
  auto* tune_cmd = app.add_subcommand("tune-scales", "grid search over "
                                                     "fusion scales");
  std::string g1 = "0.0,0.5,1.0", g2 = "0.0,0.3,0.6", g3 = "0.0";
  int tune_beam = 16;
  std::string tune_mode = "viterbi_max";
  tune_cmd->add_option("--world", world_path)->required();
  tune_cmd->add_option("--data", data_path)->required();
  tune_cmd->add_option("--elm", elm_path);
  tune_cmd->add_option("--ilm", ilm_path);
  tune_cmd->add_option("--prior", prior_path);
  tune_cmd->add_option("--grid1", g1, "comma-separated lambda1 values");
  tune_cmd->add_option("--grid2", g2, "comma-separated lambda2 values");
  tune_cmd->add_option("--grid3", g3, "comma-separated lambda3 values");
  tune_cmd->add_option("--mode", tune_mode)
      ->check(CLI::IsMember({"viterbi_max", "full_sum"}));
  tune_cmd->add_option("--beam", tune_beam);
  tune_cmd->add_option("--out", out_path)->required();

  // verify
  auto* verify_cmd =
      app.add_subcommand("verify", "run the full oracle verification suite");
  bool with_cross_domain = false;
  verify_cmd->add_flag("--cross-domain", with_cross_domain,
                       "also run the slow cross-domain analogue");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // bad flags are validation failures
  }

  Json cfg = Json::object();
  if (!config_path.empty()) cfg = load_json(config_path);
  CLI::App* active = app.get_subcommands().front();
  apply_config(active, cfg);

  if (active == gen) {
    World world = build_world(wspec);
    save_json(out_path, world_to_json(world));
    Json echo{{"vocab_size", wspec.num_labels}, {"t_min", wspec.t_min},
              {"t_max", wspec.t_max},           {"grids", wspec.num_grids},
              {"concentration", wspec.concentration},
              {"seed", wspec.seed},             {"max_len", world.max_len}};
    write_manifest(out_path + ".manifest.json", "gen-world", {}, echo,
                   {out_path});
    std::cout << "wrote " << out_path << " (" << world.num_grids()
              << " grids)\n";
  } else if (active == sample) {
    World world = world_from_json(load_json(world_path));
    Dataset data = sample_dataset(world, n_samples, seed);
    save_dataset_jsonl(out_path, data);
    write_manifest(out_path + ".manifest.json", "sample-data", {world_path},
                   Json{{"n", n_samples}, {"seed", seed}}, {out_path});
    std::cout << "wrote " << out_path << " (" << data.size() << " pairs)\n";
  } else if (active == prior_cmd) {
    World world = world_from_json(load_json(world_path));
    Dataset data = load_dataset_jsonl(data_path);
    FramePrior prior = estimate_frame_prior(data, world);
    save_json(out_path, prior_to_json(prior, world.vocab));
    std::vector<std::string> outputs{out_path};
    if (!unigram_out.empty()) {
      save_json(unigram_out,
                ctxlm_to_json(unigram_from_prior(prior), world.vocab));
      outputs.push_back(unigram_out);
    }
    write_manifest(out_path + ".manifest.json", "estimate-prior",
                   {world_path, data_path}, Json::object(), outputs);
    std::cout << "wrote " << out_path << "\n";
  } else if (active == train_cmd) {
    World world = world_from_json(load_json(world_path));
    tcfg.criterion = parse_criterion(criterion);
    tcfg.mode = mode == "sampled" ? TrainMode::kSampled
                                  : TrainMode::kExactExpectation;
    tcfg.mask_policy = parse_mask_policy(mask_policy, prior_path);
    int order = context_order == "full" ? kFullContext
                                        : std::stoi(context_order);
    Dataset data;
    std::vector<std::string> inputs{world_path};
    if (tcfg.mode == TrainMode::kSampled) {
      if (data_path.empty())
        throw ValidationError("sampled mode needs --data");
      data = load_dataset_jsonl(data_path);
      inputs.push_back(data_path);
    }
    TrainResult res =
        train(CtxLM(world.vocab.size(), order), data, world, tcfg);
    if (res.diverged)
      throw Error("training diverged after " +
                  std::to_string(res.epochs_run) + " epochs");
    save_json(out_path, ctxlm_to_json(res.model, world.vocab));
    std::vector<std::string> outputs{out_path};
    if (!snapshot_dir.empty()) {
      for (size_t i = 0; i < res.snapshots.size(); ++i) {
        std::string p = snapshot_dir + "/snapshot-" + std::to_string(i + 1) +
                        ".json";
        save_json(p, ctxlm_to_json(res.snapshots[i], world.vocab));
        outputs.push_back(p);
      }
    }
    Json echo{{"criterion", criterion},   {"mode", mode},
              {"context_order", context_order},
              {"alpha", tcfg.alpha},      {"p_mask", tcfg.p_mask},
              {"mask_policy", mask_policy},
              {"step_size", tcfg.step_size},
              {"epochs", tcfg.epochs},    {"batch_size", tcfg.batch_size},
              {"seed", tcfg.seed},
              {"final_loss",
               res.loss_trace.empty() ? 0.0 : res.loss_trace.back()}};
    write_manifest(out_path + ".manifest.json", "train-ilm", inputs, echo,
                   outputs);
    std::cout << "wrote " << out_path << " (" << res.epochs_run
              << " epochs, final loss "
              << (res.loss_trace.empty() ? 0.0 : res.loss_trace.back())
              << ")\n";
  } else if (active == elm_cmd) {
    World world = world_from_json(load_json(world_path));
    Dataset data = load_dataset_jsonl(data_path);
    std::vector<Labels> corpus;
    for (const auto& p : data) corpus.push_back(p.labels);
    CtxLM elm = make_elm(corpus, elm_order, elm_delta, world.vocab.size());
    save_json(out_path, ctxlm_to_json(elm, world.vocab));
    write_manifest(out_path + ".manifest.json", "make-elm",
                   {world_path, data_path},
                   Json{{"order", elm_order}, {"delta", elm_delta}},
                   {out_path});
    std::cout << "wrote " << out_path << "\n";
  } else if (active == dec_cmd) {
    World world = world_from_json(load_json(world_path));
    Dataset data = load_dataset_jsonl(data_path);
    std::optional<CtxLM> elm, ilm;
    std::optional<FramePrior> prior;
    std::vector<std::string> inputs{world_path, data_path};
    if (!elm_path.empty()) {
      elm = ctxlm_from_json(load_json(elm_path));
      inputs.push_back(elm_path);
    }
    if (!ilm_path.empty()) {
      ilm = ctxlm_from_json(load_json(ilm_path));
      inputs.push_back(ilm_path);
    }
    if (!prior_path.empty()) {
      prior = prior_from_json(load_json(prior_path));
      inputs.push_back(prior_path);
    }
    scales.mode = parse_decode_mode(dec_mode);
    Json scales_echo{{"lambda1", scales.lambda1}, {"lambda2", scales.lambda2},
                     {"lambda3", scales.lambda3}, {"beam", scales.beam},
                     {"lm_eos", scales.lm_eos}};
    std::ofstream report(out_path);
    if (!report) throw Error("cannot write " + out_path);
    long distance = 0, ref_len = 0;
    for (const auto& pair : data) {
      validate_pair(pair, world);
      DecodeResult dec = decode_fused(
          world.grid(pair.grid_id), elm ? &*elm : nullptr,
          ilm ? &*ilm : nullptr, prior ? &*prior : nullptr, scales);
      distance += label_error_rate(dec.best, pair.labels).distance;
      ref_len += static_cast<long>(pair.labels.size());
      report << Json{{"grid_id", pair.grid_id},
                     {"ref", pair.labels},
                     {"hyp", dec.best},
                     {"log_score", dec.log_score},
                     {"scales", scales_echo},
                     {"mode", dec_mode}}
                    .dump()
             << "\n";
    }
    double ler = static_cast<double>(distance) / std::max<long>(1, ref_len);
    std::vector<std::string> outputs{out_path};
    if (!summary_path.empty()) {
      save_json(summary_path,
                Json{{"version", kFormatVersion},
                     {"corpus_ler", ler},
                     {"edit_distance", distance},
                     {"ref_labels", ref_len},
                     {"sequences", data.size()}});
      outputs.push_back(summary_path);
    }
    write_manifest(out_path + ".manifest.json", "decode", inputs,
                   Json{{"scales", scales_echo}, {"mode", dec_mode}}, outputs);
    std::cout << "corpus LER " << ler << " over " << data.size()
              << " sequences\n";
  } else if (active == eval_cmd) {
    if (do_ppl) {
      if (model_path.empty() || data_path.empty())
        throw ValidationError("eval --ppl needs --model and --data");
      CtxLM model = ctxlm_from_json(load_json(model_path));
      std::vector<Labels> eval_set;
      for (const auto& p : load_dataset_jsonl(data_path))
        eval_set.push_back(p.labels);
      std::cout << "PPL " << perplexity(model, eval_set, log_floor) << "\n";
    } else if (!report_path.empty()) {
      std::ifstream in(report_path);
      if (!in) throw ValidationError("cannot read " + report_path);
      long distance = 0, ref_len = 0, lines = 0;
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        Json j = Json::parse(line);
        EditStats st = label_error_rate(j.at("hyp").get<Labels>(),
                                        j.at("ref").get<Labels>());
        distance += st.distance;
        ref_len += static_cast<long>(j.at("ref").size());
        ++lines;
      }
      std::cout << "corpus LER "
                << static_cast<double>(distance) / std::max<long>(1, ref_len)
                << " over " << lines << " sequences\n";
    } else {
      throw ValidationError("eval needs --ppl or --report");
    }
  } else if (active == tune_cmd) {
    World world = world_from_json(load_json(world_path));
    Dataset data = load_dataset_jsonl(data_path);
    std::optional<CtxLM> elm, ilm;
    std::optional<FramePrior> prior;
    std::vector<std::string> inputs{world_path, data_path};
    if (!elm_path.empty()) {
      elm = ctxlm_from_json(load_json(elm_path));
      inputs.push_back(elm_path);
    }
    if (!ilm_path.empty()) {
      ilm = ctxlm_from_json(load_json(ilm_path));
      inputs.push_back(ilm_path);
    }
    if (!prior_path.empty()) {
      prior = prior_from_json(load_json(prior_path));
      inputs.push_back(prior_path);
    }
    ScaleGridResult res = tune_scales(
        world, data, elm ? &*elm : nullptr, ilm ? &*ilm : nullptr,
        prior ? &*prior : nullptr, parse_grid(g1), parse_grid(g2),
        parse_grid(g3), parse_decode_mode(tune_mode), tune_beam);
    Json points = Json::array();
    std::cout << "lambda1 lambda2 lambda3  LER\n";
    for (const auto& pt : res.points) {
      points.push_back(Json{{"lambda1", pt.lambda1},
                            {"lambda2", pt.lambda2},
                            {"lambda3", pt.lambda3},
                            {"ler", pt.ler},
                            {"decode_failed", pt.decode_failed}});
      std::cout << pt.lambda1 << " " << pt.lambda2 << " " << pt.lambda3
                << "  " << pt.ler << (pt.decode_failed ? " (failed)" : "")
                << "\n";
    }
    save_json(out_path,
              Json{{"version", kFormatVersion},
                   {"points", std::move(points)},
                   {"selected",
                    Json{{"lambda1", res.selected.lambda1},
                         {"lambda2", res.selected.lambda2},
                         {"lambda3", res.selected.lambda3},
                         {"ler", res.selected.ler}}},
                   {"selection_rule",
                    "min LER, ties: smallest lambda2, lambda3, lambda1"}});
    write_manifest(out_path + ".manifest.json", "tune-scales", inputs,
                   Json{{"grid1", g1}, {"grid2", g2}, {"grid3", g3},
                        {"mode", tune_mode}, {"beam", tune_beam}},
                   {out_path});
    std::cout << "selected lambda1=" << res.selected.lambda1
              << " lambda2=" << res.selected.lambda2
              << " lambda3=" << res.selected.lambda3
              << " (LER " << res.selected.ler << ")\n";
  } else if (active == verify_cmd) {
    bool ok = run_verification(std::cout);
    if (with_cross_domain) {
      std::string analysis;
      if (!check_cross_domain(std::cout, &analysis) && !analysis.empty())
        std::cerr << analysis;
    }
    return ok ? 0 : 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ilmlab::ValidationError& e) {
    std::cerr << ilmlab::Json{{"error", {{"type", "validation"},
                                         {"message", e.what()}}}}
                     .dump()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << ilmlab::Json{{"error", {{"type", "runtime"},
                                         {"message", e.what()}}}}
                     .dump()
              << "\n";
    return 2;
  }
}
