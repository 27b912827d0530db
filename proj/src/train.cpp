#include "ilmlab/train.hpp"

#include <algorithm>
#include <cmath>

#include "ilmlab/rng.hpp"
#include "ilmlab/worldgen.hpp"

namespace ilmlab {

Criterion parse_criterion(const std::string& name) {
  if (name == "label") return Criterion::kLabel;
  if (name == "label_smoothed") return Criterion::kLabelSmoothed;
  if (name == "label_masked") return Criterion::kLabelMasked;
  if (name == "seq") return Criterion::kSeq;
  if (name == "ce") return Criterion::kCe;
  throw ValidationError("unknown criterion: " + name);
}

std::string criterion_name(Criterion c) {
  switch (c) {
    case Criterion::kLabel: return "label";
    case Criterion::kLabelSmoothed: return "label_smoothed";
    case Criterion::kLabelMasked: return "label_masked";
    case Criterion::kSeq: return "seq";
    case Criterion::kCe: return "ce";
  }
  return "?";
}

namespace {

LossResult eval_loss(const CtxLM& student, const Dataset& batch,
                     TeacherOracle& teacher, const TrainConfig& cfg,
                     std::mt19937_64& mask_rng) {
  switch (cfg.criterion) {
    case Criterion::kLabel:
      return kd_label_loss(student, batch, teacher);
    case Criterion::kLabelSmoothed:
      return kd_label_loss_smoothed(student, batch, teacher, cfg.alpha);
    case Criterion::kLabelMasked:
      return kd_label_loss_masked(student, batch, teacher, cfg.p_mask,
                                  cfg.mask_policy, mask_rng);
    case Criterion::kSeq:
      return kd_seq_loss(student, batch, teacher, cfg.alpha);
    case Criterion::kCe:
      return ce_transcription_loss(student, batch);
  }
  throw Error("unreachable");
}

// Exact-expectation label KD: the full-batch gradient only depends on
// the per-context aggregate of teacher rows, so aggregate once and step
// on that. The step is normalized by the context visit weight (diagonal
// preconditioning); fixed points are unchanged but rarely-visited
// contexts converge at the same rate as frequent ones.
TrainResult train_exact_label(CtxLM student, const Dataset& joint,
                              const World& world, const TrainConfig& cfg) {
  TeacherOracle teacher(world);
  struct Agg {
    double weight = 0.0;           // total visit weight W_ctx
    std::vector<double> target;    // sum of w * teacher row
  };
  std::map<ContextKey, Agg> agg;
  std::map<ContextKey, Labels> key_prefix;  // any prefix realizing the key
  double const_term = 0.0;  // sum of w * H(-p) entries of the KL
  double total_w = 0.0;
  for (const auto& pair : joint) total_w += pair.weight;
  if (total_w <= 0.0) throw ValidationError("joint has zero weight");
  for (const auto& pair : joint) {
    double w = pair.weight / total_w;
    if (w == 0.0) continue;
    Labels prefix;
    for (size_t s = 0; s <= pair.labels.size(); ++s) {
      const auto& row = teacher.posterior_row(pair.grid_id, prefix);
      ContextKey key = student.context_key(prefix);
      auto& a = agg.try_emplace(key).first->second;
      if (a.target.empty()) a.target.assign(row.size(), 0.0);
      a.weight += w;
      for (size_t i = 0; i < row.size(); ++i) {
        a.target[i] += w * row[i];
        if (row[i] > 0.0) const_term += w * row[i] * std::log(row[i]);
      }
      key_prefix.try_emplace(key, prefix);
      if (s < pair.labels.size()) prefix.push_back(pair.labels[s]);
    }
  }

  TrainResult res;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss = const_term;
    GradTable grad;
    double max_tv = 0.0;
    for (const auto& [key, a] : agg) {
      const auto lq = student.log_prob_row(key_prefix.at(key));
      auto& g = grad.try_emplace(key, std::vector<double>(lq.size(), 0.0))
                    .first->second;
      double tv = 0.0;
      for (size_t i = 0; i < lq.size(); ++i) {
        double q = (lq[i] == kLogZero) ? 0.0 : std::exp(lq[i]);
        if (a.target[i] > 0.0) loss -= a.target[i] * lq[i];
        g[i] = q - a.target[i] / a.weight;
        tv += std::abs(q - a.target[i] / a.weight);
      }
      max_tv = std::max(max_tv, 0.5 * tv);
    }
    if (!std::isfinite(loss)) {
      res.diverged = true;
      break;
    }
    res.loss_trace.push_back(loss);
    student.apply_gradient(grad, cfg.step_size);
    ++res.epochs_run;
    if (cfg.snapshot_period > 0 && (epoch + 1) % cfg.snapshot_period == 0)
      res.snapshots.push_back(student);
    if (cfg.exact_tolerance > 0.0 && max_tv < cfg.exact_tolerance) break;
  }
  res.model = std::move(student);
  return res;
}

}  // namespace

TrainResult train(CtxLM student, const Dataset& dataset, const World& world,
                  const TrainConfig& config) {
  world.validate();
  if (config.step_size <= 0.0) throw ValidationError("step size must be > 0");
  if (config.epochs < 1) throw ValidationError("epochs must be >= 1");

  if (config.mode == TrainMode::kExactExpectation) {
    Dataset joint = enumerate_joint(world);
    if (config.criterion == Criterion::kLabel)
      return train_exact_label(std::move(student), joint, world, config);
    TeacherOracle teacher(world);
    auto mask_rng = make_rng(config.seed, 0x6d61736bull);
    TrainResult res;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      LossResult lr = eval_loss(student, joint, teacher, config, mask_rng);
      if (!std::isfinite(lr.loss)) {
        res.diverged = true;
        break;
      }
      res.loss_trace.push_back(lr.loss);
      student.apply_gradient(lr.grad, config.step_size);
      ++res.epochs_run;
      if (config.snapshot_period > 0 &&
          (epoch + 1) % config.snapshot_period == 0)
        res.snapshots.push_back(student);
    }
    res.model = std::move(student);
    return res;
  }

  if (dataset.empty()) throw ValidationError("empty dataset");
  if (config.batch_size < 1) throw ValidationError("batch size must be >= 1");
  TeacherOracle teacher(world);
  auto shuffle_rng = make_rng(config.seed, 0x73687566ull);
  auto mask_rng = make_rng(config.seed, 0x6d61736bull);
  std::vector<size_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult res;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with the platform-independent uniform
    for (size_t i = order.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform01(shuffle_rng) * i);
      std::swap(order[i - 1], order[j]);
    }
    double epoch_loss = 0.0;
    int batches = 0;
    bool bad = false;
    for (size_t begin = 0; begin < order.size();
         begin += static_cast<size_t>(config.batch_size)) {
      size_t end = std::min(order.size(),
                            begin + static_cast<size_t>(config.batch_size));
      Dataset batch;
      batch.reserve(end - begin);
      for (size_t i = begin; i < end; ++i) batch.push_back(dataset[order[i]]);
      LossResult lr = eval_loss(student, batch, teacher, config, mask_rng);
      if (!std::isfinite(lr.loss)) {
        bad = true;
        break;
      }
      student.apply_gradient(lr.grad, config.step_size);
      epoch_loss += lr.loss;
      ++batches;
    }
    if (bad) {
      res.diverged = true;
      break;
    }
    res.loss_trace.push_back(epoch_loss / std::max(1, batches));
    ++res.epochs_run;
    if (config.snapshot_period > 0 && (epoch + 1) % config.snapshot_period == 0)
      res.snapshots.push_back(student);
  }
  res.model = std::move(student);
  return res;
}

}  // namespace ilmlab
