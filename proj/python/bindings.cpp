#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "detective/corpus.hpp"
#include "detective/error.hpp"
#include "detective/eval.hpp"
#include "detective/features.hpp"
#include "detective/judges.hpp"
#include "detective/models/classifier.hpp"
#include "detective/models/model_io.hpp"

namespace py = pybind11;
using namespace detective;

namespace {

std::vector<Label> parse_labels(const std::vector<std::string>& labels) {
  std::vector<Label> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(parse_label(l));
  return out;
}

py::dict excerpt_dict(const Excerpt& e) {
  py::dict d;
  d["excerpt_id"] = e.excerpt_id;
  d["text"] = e.text;
  d["label"] = std::string(to_string(e.label));
  d["origin"] = std::string(to_string(e.origin));
  d["source_excerpt_id"] = e.source_excerpt_id ? py::cast(*e.source_excerpt_id) : py::none();
  d["char_len"] = e.char_len;
  d["word_count"] = e.word_count;
  return d;
}

models::TextModel train(const std::string& kind, const std::vector<std::string>& texts,
                        const std::vector<std::string>& labels, double alpha, std::size_t hidden_units,
                        std::uint64_t seed) {
  if (texts.size() != labels.size()) throw Error(ErrorCode::InvalidArgument, "texts and labels differ in length");
  models::ModelSpec spec;
  spec.kind = models::parse_model_kind(kind);
  spec.name = std::string(models::to_string(spec.kind));
  spec.alpha = alpha;
  spec.mlp.hidden_units = hidden_units;
  spec.mlp.seed = seed;
  std::vector<Excerpt> training;
  training.reserve(texts.size());
  const auto y = parse_labels(labels);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    // Identity fields only matter for the model fingerprint.
    Excerpt e;
    e.excerpt_id = "py-" + std::to_string(i);
    e.text = texts[i];
    e.label = y[i];
    training.push_back(std::move(e));
  }
  return models::train_text_model(spec, training);
}

}  // namespace

PYBIND11_MODULE(_detective, m) {
  m.doc() = "Bag-of-words detector for machine-rewritten prose";

  static py::exception<Error> error_type(m, "DetectiveError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error_type, e.what());
    }
  });

  m.def("tokenize", [](const std::string& text) { return features::tokenize(text); }, py::arg("text"));

  m.def(
      "chunk_text",
      [](const std::string& book_id, const std::string& body, std::size_t target_words) {
        py::list out;
        for (const auto& e : corpus::chunk_text(book_id, body, target_words)) out.append(excerpt_dict(e));
        return out;
      },
      py::arg("book_id"), py::arg("body"), py::arg("target_words") = 100);

  m.def(
      "split_sizes",
      [](std::size_t n, double holdout_fraction, double test_fraction_of_pool) {
        eval::SplitSpec spec;
        spec.holdout_fraction = holdout_fraction;
        spec.test_fraction_of_pool = test_fraction_of_pool;
        const auto s = eval::split_sizes(n, spec);
        return py::make_tuple(s.train, s.test, s.validation);
      },
      py::arg("n"), py::arg("holdout_fraction") = 0.2, py::arg("test_fraction_of_pool") = 0.3,
      "(train, test, validation) sizes for n excerpts");

  m.def(
      "compute_metrics",
      [](const std::vector<std::string>& y_true, const std::vector<std::string>& y_pred) {
        const auto t = parse_labels(y_true);
        const auto p = parse_labels(y_pred);
        const auto r = eval::compute_metrics(t, p);
        py::dict d;
        d["accuracy"] = r.summary.accuracy;
        d["precision"] = r.summary.precision;
        d["recall"] = r.summary.recall;
        d["f1"] = r.summary.f1;
        d["tp"] = r.confusion.tp;
        d["fp"] = r.confusion.fp;
        d["fn"] = r.confusion.fn;
        d["tn"] = r.confusion.tn;
        return d;
      },
      py::arg("y_true"), py::arg("y_pred"));

  m.def(
      "t_test_upper",
      [](const std::vector<double>& scores, double mu0, double quiz_size) {
        const auto r = judges::t_test_upper(std::span<const double>(scores), mu0, quiz_size);
        py::dict d;
        d["n"] = r.n;
        d["mean"] = r.mean;
        d["sd"] = r.sd;
        d["t"] = r.t;
        d["df"] = r.df;
        d["p_one_tailed"] = r.p_one_tailed;
        d["ci_upper_one_sided"] = r.ci_upper_one_sided;
        d["as_proportion"] = r.as_proportion;
        return d;
      },
      py::arg("scores"), py::arg("mu0") = 5.5, py::arg("quiz_size") = 10.0);

  py::class_<models::TextModel>(m, "Model")
      .def_static("train", &train, py::arg("kind"), py::arg("texts"), py::arg("labels"), py::arg("alpha") = 0.7,
                  py::arg("hidden_units") = 155, py::arg("seed") = 42,
                  "Fit 'nb' or 'mlp' on texts labelled 'human' or 'ai'")
      .def_static("load", [](const std::filesystem::path& p) { return models::load_model(p); }, py::arg("path"))
      .def("save", [](const models::TextModel& self, const std::filesystem::path& p) { models::save_model(p, self); },
           py::arg("path"))
      .def_property_readonly("kind", [](const models::TextModel& self) { return std::string(models::to_string(self.kind())); })
      .def_property_readonly("vocabulary_size", [](const models::TextModel& self) { return self.vocab.size(); })
      .def(
          "classify",
          [](const models::TextModel& self, const std::string& text) {
            const auto p = self.classify(text);
            return py::make_tuple(std::string(to_string(p.label)), p.score_ai);
          },
          py::arg("text"), "(label, P(ai))")
      .def(
          "predict",
          [](const models::TextModel& self, const std::vector<std::string>& texts) {
            std::vector<std::string> out;
            for (const auto& p : self.predict(features::vectorize(texts, self.vocab)))
              out.emplace_back(to_string(p.label));
            return out;
          },
          py::arg("texts"));
}
