// Python bindings over the core pipeline: cohort generation, feature
// extraction, the stability-score scan, and the training/ensemble runners.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hwad/dataset.hpp"
#include "hwad/ensembles.hpp"
#include "hwad/evaluation.hpp"
#include "hwad/experiment.hpp"
#include "hwad/kinematics.hpp"
#include "hwad/neural.hpp"
#include "hwad/optimizer.hpp"
#include "hwad/synth.hpp"
#include "hwad/tss.hpp"

namespace py = pybind11;
using namespace hwad;

namespace {

py::array_t<double> features_to_array(const std::vector<StrokeFeatureVector>& rows) {
  py::array_t<double> out({static_cast<py::ssize_t>(rows.size()),
                           static_cast<py::ssize_t>(kStrokeFeatureCount)});
  auto buf = out.mutable_unchecked<2>();
  for (py::ssize_t r = 0; r < buf.shape(0); ++r) {
    for (py::ssize_t c = 0; c < buf.shape(1); ++c) {
      buf(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  }
  return out;
}

FeatureDataset dataset_from_cohort(const synth::Cohort& cohort) {
  FeatureDataset ds;
  ds.subjects = cohort.subjects;
  for (const auto& rec : cohort.recordings) {
    FeatureSequence seq;
    seq.subject_id = rec.subject_id;
    seq.task_id = rec.task_id;
    for (const auto& f : kin::extract_task_features(rec)) {
      seq.rows.emplace_back(f.begin(), f.end());
    }
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

py::dict summary_dict(const cv::MetricSummary& m) {
  py::dict d;
  d["per_fold"] = m.per_fold;
  d["mean"] = m.mean;
  d["std"] = m.std_dev;
  return d;
}

py::dict result_dict(const cli::CellResult& r) {
  py::dict d;
  d["model"] = r.model;
  d["ws"] = r.ws;
  d["stride"] = r.stride;
  py::dict metrics;
  metrics["accuracy"] = summary_dict(r.subject_report.accuracy);
  metrics["sensitivity"] = summary_dict(r.subject_report.sensitivity);
  metrics["specificity"] = summary_dict(r.subject_report.specificity);
  metrics["f1"] = summary_dict(r.subject_report.f1);
  d["metrics"] = metrics;
  return d;
}

}  // namespace

PYBIND11_MODULE(hwad, m) {
  m.doc() = "handwriting cohort pipeline: synthesis, kinematic features, "
            "recurrent classifiers and stroke-level ensembles";

  py::class_<PenSample>(m, "PenSample")
      .def(py::init<>())
      .def_readwrite("t", &PenSample::t)
      .def_readwrite("x", &PenSample::x)
      .def_readwrite("y", &PenSample::y)
      .def_readwrite("pressure", &PenSample::pressure)
      .def_readwrite("on_paper", &PenSample::on_paper);

  py::class_<Stroke>(m, "Stroke")
      .def(py::init<>())
      .def_readwrite("samples", &Stroke::samples)
      .def_readwrite("index", &Stroke::index)
      .def("duration", &Stroke::duration)
      .def("on_paper", &Stroke::on_paper);

  py::class_<TaskRecording>(m, "TaskRecording")
      .def(py::init<>())
      .def_readwrite("subject_id", &TaskRecording::subject_id)
      .def_readwrite("task_id", &TaskRecording::task_id)
      .def_readwrite("strokes", &TaskRecording::strokes)
      .def("sample_count", &TaskRecording::sample_count);

  py::class_<SubjectRecord>(m, "SubjectRecord")
      .def(py::init<>())
      .def_readwrite("subject_id", &SubjectRecord::subject_id)
      .def_readwrite("label", &SubjectRecord::label)
      .def_property(
          "sex", [](const SubjectRecord& s) { return s.sex == Sex::male ? "male" : "female"; },
          [](SubjectRecord& s, const std::string& v) {
            s.sex = v == "male" ? Sex::male : Sex::female;
          })
      .def_readwrite("age", &SubjectRecord::age)
      .def_property(
          "work",
          [](const SubjectRecord& s) {
            return s.work == Work::manual ? "manual" : "intellectual";
          },
          [](SubjectRecord& s, const std::string& v) {
            s.work = v == "manual" ? Work::manual : Work::intellectual;
          })
      .def_readwrite("education", &SubjectRecord::education);

  py::class_<synth::ClassEffect>(m, "ClassEffect")
      .def(py::init<>())
      .def_readwrite("velocity_scale", &synth::ClassEffect::velocity_scale)
      .def_readwrite("jerk_scale", &synth::ClassEffect::jerk_scale)
      .def_readwrite("pause_scale", &synth::ClassEffect::pause_scale)
      .def_readwrite("drift", &synth::ClassEffect::drift);

  py::class_<synth::GeneratorConfig>(m, "GeneratorConfig")
      .def(py::init([](std::uint64_t seed, int n_ad, int n_hc, std::vector<int> tasks,
                       std::pair<int, int> samples_per_stroke,
                       std::pair<int, int> strokes_per_task, synth::ClassEffect effect) {
             synth::GeneratorConfig cfg;
             cfg.seed = seed;
             cfg.n_ad = n_ad;
             cfg.n_hc = n_hc;
             cfg.tasks = std::move(tasks);
             cfg.samples_per_stroke = {samples_per_stroke.first, samples_per_stroke.second};
             cfg.strokes_per_task = {strokes_per_task.first, strokes_per_task.second};
             cfg.effect = effect;
             return cfg;
           }),
           py::arg("seed") = 7, py::arg("n_ad") = 10, py::arg("n_hc") = 10,
           py::arg("tasks") = std::vector<int>{},
           py::arg("samples_per_stroke") = std::pair<int, int>{30, 60},
           py::arg("strokes_per_task") = std::pair<int, int>{60, 66},
           py::arg("effect") = synth::ClassEffect{})
      .def_readwrite("seed", &synth::GeneratorConfig::seed)
      .def_readwrite("n_ad", &synth::GeneratorConfig::n_ad)
      .def_readwrite("n_hc", &synth::GeneratorConfig::n_hc)
      .def_readwrite("tasks", &synth::GeneratorConfig::tasks)
      .def_readwrite("effect", &synth::GeneratorConfig::effect);

  py::class_<synth::Cohort>(m, "Cohort")
      .def_readonly("subjects", &synth::Cohort::subjects)
      .def_readonly("recordings", &synth::Cohort::recordings);

  py::class_<FeatureDataset>(m, "FeatureDataset")
      .def("n_subjects", [](const FeatureDataset& ds) { return ds.subjects.size(); })
      .def("n_sequences", [](const FeatureDataset& ds) { return ds.sequences.size(); })
      .def("feature_dim", &FeatureDataset::feature_dim);

  m.def("generate_cohort", &synth::generate_cohort, py::arg("config"),
        "Deterministic synthetic cohort for the given config.");

  m.def("validate_recording", [](const TaskRecording& rec) {
    py::list out;
    for (const auto& v : validate_recording(rec)) {
      out.append(py::make_tuple(v.where, v.what));
    }
    return out;
  });

  m.def("encode_statics", [](const SubjectRecord& s) {
    const Statics v = encode_statics(s);
    return std::vector<double>(v.begin(), v.end());
  });

  m.def("feature_names", []() {
    return std::vector<std::string>(kStrokeFeatureNames.begin(), kStrokeFeatureNames.end());
  });

  m.def("extract_task_features",
        [](const TaskRecording& rec) { return features_to_array(kin::extract_task_features(rec)); },
        py::arg("recording"), "27 canonical features per stroke, shape (n_strokes, 27).");

  m.def("build_feature_dataset", &dataset_from_cohort, py::arg("cohort"),
        "Extract features for every recording and join them with the subjects.");

  m.def("tss_grid_scan",
        [](const FeatureDataset& ds, std::vector<int> ws, std::vector<int> strides) {
          const auto scan = tss::tss_grid_scan(ds.sequences, ws, strides);
          py::list cells;
          for (const auto& cell : scan.cells) {
            py::dict d;
            d["stride"] = cell.stride;
            d["window"] = cell.window;
            d["d_s"] = cell.components.d_s;
            d["a"] = cell.components.a;
            d["r"] = cell.components.r;
            d["e"] = cell.components.e;
            d["tss"] = cell.components.tss();
            cells.append(d);
          }
          py::dict out;
          out["cells"] = cells;
          out["argmax"] = scan.argmax;
          return out;
        },
        py::arg("dataset"), py::arg("ws"), py::arg("strides"));

  m.def("train_cell",
        [](const FeatureDataset& ds, const std::string& cell, int hidden, bool bidirectional,
           double dropout, bool layer_norm, int ws, int stride, int epochs, int batch_size,
           std::uint64_t seed_base, int folds) {
          nn::EncoderConfig model;
          model.cell = nn::cell_from_name(cell);
          model.hidden = hidden;
          model.bidirectional = bidirectional;
          model.dropout = dropout;
          model.layer_norm = layer_norm;
          cli::TrainingSpec training;
          training.epochs = epochs;
          training.batch_size = batch_size;
          training.folds = folds;
          return result_dict(cli::run_training_cell(ds, model, training, seed_base, ws, stride));
        },
        py::arg("dataset"), py::arg("cell") = "gru", py::arg("hidden") = 32,
        py::arg("bidirectional") = true, py::arg("dropout") = 0.3, py::arg("layer_norm") = true,
        py::arg("ws") = 60, py::arg("stride") = 1, py::arg("epochs") = 6,
        py::arg("batch_size") = 64, py::arg("seed_base") = 42, py::arg("folds") = 5);

  m.def("run_ensemble",
        [](const FeatureDataset& ds, const std::string& strategy, std::uint64_t seed_base,
           int folds) {
          cli::EnsembleSpec spec;
          cli::TrainingSpec training;
          training.folds = folds;
          return result_dict(cli::run_ensemble_cell(ds, spec, ens::strategy_from_name(strategy),
                                                    training, seed_base));
        },
        py::arg("dataset"), py::arg("strategy") = "ranking", py::arg("seed_base") = 42,
        py::arg("folds") = 5);

  // low-level numerics used by the smoke tests
  m.def("class_weights", &opt::class_weights, py::arg("labels"));
  m.def("weighted_bce", &opt::weighted_bce, py::arg("probs"), py::arg("labels"),
        py::arg("weights"));
  m.def("clip_gradients", [](std::vector<double> grads, double max_norm) {
    const double norm = opt::clip_gradients(grads, max_norm);
    return py::make_tuple(grads, norm);
  });
  m.def("fold_seed", &cv::fold_seed, py::arg("seed_base"), py::arg("fold_index"));
  m.def("subject_decision", &cv::subject_decision, py::arg("window_probs"));

  m.attr("__version__") = "0.1.0";
}
