#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>

#include "ilmlab/io.hpp"
#include "ilmlab/train.hpp"
#include "ilmlab/tuning.hpp"
#include "ilmlab/worldgen.hpp"

namespace py = pybind11;
using namespace ilmlab;

namespace {

PosteriorGrid grid_from_probs(int num_labels,
                              const std::vector<std::vector<double>>& rows) {
  PosteriorGrid g;
  g.num_labels = num_labels;
  for (const auto& row : rows) {
    std::vector<double> lr;
    for (double p : row) lr.push_back(p > 0.0 ? std::log(p) : kLogZero);
    g.log_rows.push_back(std::move(lr));
  }
  g.validate();
  return g;
}

TrainConfig make_config(const std::string& criterion, const std::string& mode,
                        double step_size, int epochs, int batch_size,
                        std::uint64_t seed, double alpha, double p_mask,
                        double exact_tolerance) {
  TrainConfig cfg;
  cfg.criterion = parse_criterion(criterion);
  cfg.mode = mode == "exact_expectation" ? TrainMode::kExactExpectation
                                         : TrainMode::kSampled;
  cfg.step_size = step_size;
  cfg.epochs = epochs;
  cfg.batch_size = batch_size;
  cfg.seed = seed;
  cfg.alpha = alpha;
  cfg.p_mask = p_mask;
  cfg.exact_tolerance = exact_tolerance;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "CTC internal language model estimation lab";

  py::register_exception<ValidationError>(m, "ValidationError",
                                          PyExc_ValueError);
  py::register_exception<DeadPrefixError>(m, "DeadPrefixError",
                                          PyExc_RuntimeError);

  py::class_<PosteriorGrid>(m, "PosteriorGrid")
      .def(py::init(&grid_from_probs), py::arg("num_labels"), py::arg("rows"))
      .def_readonly("num_labels", &PosteriorGrid::num_labels)
      .def_property_readonly("frames", &PosteriorGrid::frames)
      .def_readonly("log_rows", &PosteriorGrid::log_rows);

  py::class_<World>(m, "World")
      .def_property_readonly("num_grids", &World::num_grids)
      .def_readonly("max_len", &World::max_len)
      .def("grid", &World::grid, py::return_value_policy::reference_internal)
      .def("to_json", [](const World& w) { return world_to_json(w).dump(2); })
      .def_static("from_json", [](const std::string& s) {
        return world_from_json(Json::parse(s));
      });

  py::class_<TrainingPair>(m, "TrainingPair")
      .def(py::init([](int grid_id, Labels labels, std::vector<int> bounds,
                       double weight) {
             return TrainingPair{grid_id, std::move(labels), std::move(bounds),
                                 weight};
           }),
           py::arg("grid_id"), py::arg("labels"),
           py::arg("boundaries") = std::vector<int>{},
           py::arg("weight") = 1.0)
      .def_readonly("grid_id", &TrainingPair::grid_id)
      .def_readonly("labels", &TrainingPair::labels)
      .def_readonly("boundaries", &TrainingPair::boundaries)
      .def_readonly("weight", &TrainingPair::weight);

  py::class_<CtxLM>(m, "CtxLM")
      .def(py::init<int, int, bool>(), py::arg("num_labels"),
           py::arg("context_order"), py::arg("models_eos") = true)
      .def_property_readonly("num_labels", &CtxLM::num_labels)
      .def_property_readonly("context_order", &CtxLM::context_order)
      .def_property_readonly("models_eos", &CtxLM::models_eos)
      .def("prob_row", &CtxLM::prob_row)
      .def("step_log_prob", &CtxLM::step_log_prob)
      .def("seq_log_prob", &CtxLM::seq_log_prob)
      .def("to_json",
           [](const CtxLM& lm) {
             Vocabulary vocab;
             for (int i = 0; i < lm.num_labels(); ++i)
               vocab.labels.push_back("l" + std::to_string(i));
             return ctxlm_to_json(lm, vocab).dump(2);
           })
      .def_static("from_json", [](const std::string& s) {
        return ctxlm_from_json(Json::parse(s));
      });

  py::class_<FramePrior>(m, "FramePrior")
      .def_readonly("probs", &FramePrior::probs);

  m.def("collapse", &collapse, py::arg("alignment"), py::arg("num_labels"));
  m.def("ctc_log_prob", &ctc_log_prob);
  m.def("prefix_log_prob", &prefix_log_prob);
  m.def("label_posterior_row", &label_posterior_row);
  m.def("brute_force_seq_distribution", &brute_force_seq_distribution,
        py::arg("grid"), py::arg("max_len"),
        py::arg("max_paths") = std::uint64_t{1} << 22);

  m.def("build_world", [](int num_labels, int t_min, int t_max, int num_grids,
                          double concentration, std::uint64_t seed) {
          WorldSpec spec;
          spec.num_labels = num_labels;
          spec.t_min = t_min;
          spec.t_max = t_max;
          spec.num_grids = num_grids;
          spec.concentration = concentration;
          spec.seed = seed;
          return build_world(spec);
        },
        py::arg("num_labels"), py::arg("t_min"), py::arg("t_max"),
        py::arg("num_grids"), py::arg("concentration") = 1.0,
        py::arg("seed") = 1);
  m.def("sample_dataset", &sample_dataset);
  m.def("enumerate_joint", &enumerate_joint);
  m.def("make_elm", &make_elm, py::arg("corpus"), py::arg("order"),
        py::arg("delta"), py::arg("num_labels") = 0);

  m.def("estimate_frame_prior", &estimate_frame_prior);
  m.def("unigram_from_prior", &unigram_from_prior);
  m.def("exact_ilm_seq", &exact_ilm_seq);
  m.def("exact_ilm_posterior", &exact_ilm_posterior);
  m.def("perplexity", &perplexity, py::arg("model"), py::arg("eval_set"),
        py::arg("log_floor") = -30.0);

  m.def("train",
        [](const CtxLM& student, const Dataset& data, const World& world,
           const std::string& criterion, const std::string& mode,
           double step_size, int epochs, int batch_size, std::uint64_t seed,
           double alpha, double p_mask, double exact_tolerance) {
          TrainResult res =
              train(student, data, world,
                    make_config(criterion, mode, step_size, epochs, batch_size,
                                seed, alpha, p_mask, exact_tolerance));
          return py::make_tuple(res.model, res.loss_trace, res.diverged,
                                res.epochs_run);
        },
        py::arg("student"), py::arg("data"), py::arg("world"),
        py::arg("criterion") = "label", py::arg("mode") = "sampled",
        py::arg("step_size") = 0.5, py::arg("epochs") = 50,
        py::arg("batch_size") = 8, py::arg("seed") = 1,
        py::arg("alpha") = 0.5, py::arg("p_mask") = 0.4,
        py::arg("exact_tolerance") = 0.0);

  m.def("decode_fused",
        [](const PosteriorGrid& grid, const CtxLM* elm, const CtxLM* ilm,
           const FramePrior* prior, double lambda1, double lambda2,
           double lambda3, const std::string& mode, int beam, bool lm_eos) {
          FusionScales scales;
          scales.lambda1 = lambda1;
          scales.lambda2 = lambda2;
          scales.lambda3 = lambda3;
          scales.mode = parse_decode_mode(mode);
          scales.beam = beam;
          scales.lm_eos = lm_eos;
          DecodeResult res = decode_fused(grid, elm, ilm, prior, scales);
          return py::make_tuple(res.best, res.log_score);
        },
        py::arg("grid"), py::arg("elm") = nullptr, py::arg("ilm") = nullptr,
        py::arg("prior") = nullptr, py::arg("lambda1") = 0.0,
        py::arg("lambda2") = 0.0, py::arg("lambda3") = 0.0,
        py::arg("mode") = "viterbi_max", py::arg("beam") = 16,
        py::arg("lm_eos") = true);

  m.def("label_error_rate", [](const Labels& hyp, const Labels& ref) {
    EditStats st = label_error_rate(hyp, ref);
    return py::make_tuple(st.distance, st.rate);
  });
}
