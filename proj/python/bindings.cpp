#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "ctxsearch/cli.hpp"
#include "ctxsearch/contrastive.hpp"
#include "ctxsearch/errors.hpp"
#include "ctxsearch/lexer.hpp"
#include "ctxsearch/pipeline.hpp"
#include "ctxsearch/retrieval.hpp"

namespace py = pybind11;
using namespace ctxsearch;

namespace {

RankedList ranked_ids(const std::vector<std::string>& ids) {
  RankedList list;
  list.items.reserve(ids.size());
  double score = static_cast<double>(ids.size());
  for (const std::string& id : ids) list.items.push_back({id, score--});
  return list;
}

py::dict report_dict(const MetricReport& report) {
  py::dict d;
  d["map"] = report.map;
  d["ndcg"] = report.ndcg;
  d["precision_at"] = report.precision_at;
  d["mrr"] = report.mrr;
  d["queries"] = report.queries;
  d["candidates"] = report.candidates;
  return d;
}

std::vector<CorpusFile> corpus_from(const std::vector<std::tuple<std::string, std::string, std::string>>& files) {
  std::vector<CorpusFile> out;
  for (const auto& [source, lang, content] : files) {
    language(lang);
    CorpusFile f;
    f.path = source;
    f.source = source;
    const auto slash = source.find('/');
    f.repo = slash == std::string::npos ? "." : source.substr(0, slash);
    f.language = lang;
    f.content = content;
    f.content_hash = content_hash(content);
    out.push_back(std::move(f));
  }
  std::sort(out.begin(), out.end(),
            [](const CorpusFile& a, const CorpusFile& b) { return a.content_hash < b.content_hash; });
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the ctxsearch C++ core";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  m.def("version", [] { return version_string(); });

  m.def(
      "parse_tokens",
      [](const std::string& source, const std::string& lang) {
        const SyntaxTree tree = parse(source, language(lang));
        std::vector<std::string> texts;
        for (const Token& t : tree.leaves()) texts.push_back(t.text);
        return texts;
      },
      py::arg("source"), py::arg("language"), "Leaf token texts of the concrete syntax tree");

  m.def(
      "reconstruct",
      [](const std::string& source, const std::string& lang) {
        return parse(source, language(lang)).text();
      },
      py::arg("source"), py::arg("language"), "Concatenated leaves, equal to the source");

  m.def(
      "select_span",
      [](const std::string& source, const std::string& lang, std::size_t length, std::uint64_t seed) {
        const Language& l = language(lang);
        const SyntaxTree tree = parse(source, l);
        Rng rng(seed);
        const SpanSelection span = select_span(tree, length, rng);
        const SplitResult parts = split(tree, span, l);
        py::dict d;
        d["leaf_start"] = span.leaf_start;
        d["leaf_count"] = span.leaf_count;
        d["context"] = join_tokens(parts.context);
        d["target"] = join_tokens(parts.target);
        return d;
      },
      py::arg("source"), py::arg("language"), py::arg("length"), py::arg("seed") = 0);

  m.def("encoder_tokens", &encoder_tokens, py::arg("text"));

  py::class_<ContextTargetPair>(m, "Pair")
      .def_readonly("id", &ContextTargetPair::id)
      .def_readonly("language", &ContextTargetPair::language)
      .def_readonly("context", &ContextTargetPair::context)
      .def_readonly("target", &ContextTargetPair::target)
      .def_property_readonly("source", [](const ContextTargetPair& p) { return p.meta.source; })
      .def_property_readonly("dedent_cols", [](const ContextTargetPair& p) { return p.meta.dedent_cols; })
      .def_property_readonly("skipped_masking",
                             [](const ContextTargetPair& p) { return p.meta.skipped_masking; })
      .def_property_readonly("context_aliases",
                             [](const ContextTargetPair& p) { return p.meta.context_aliases; })
      .def_property_readonly("target_aliases",
                             [](const ContextTargetPair& p) { return p.meta.target_aliases; })
      .def("to_json", &to_json_line)
      .def_static("from_json", [](const std::string& line) { return from_json_line(line); })
      .def("__repr__", [](const ContextTargetPair& p) { return "<Pair " + p.id + " " + p.language + ">"; });

  m.def(
      "generate_pairs",
      [](const std::vector<std::tuple<std::string, std::string, std::string>>& files, std::uint64_t seed,
         bool identifier_masking, bool dedent, double mask_prob, double skip_prob, std::size_t jobs) {
        PairConfig config;
        config.identifier_masking = identifier_masking;
        config.dedent = dedent;
        config.mask_prob = mask_prob;
        config.skip_pair_prob = skip_prob;
        const auto corpus = corpus_from(files);
        py::gil_scoped_release release;
        return make_pairs(corpus, config, seed, jobs);
      },
      py::arg("files"), py::arg("seed") = 0, py::arg("identifier_masking") = true,
      py::arg("dedent") = true, py::arg("mask_prob") = kDefaultMaskProb,
      py::arg("skip_prob") = kDefaultSkipPairProb, py::arg("jobs") = 1,
      "Pairs from (source, language, content) tuples");

  m.def(
      "batch_by_language",
      [](const std::vector<ContextTargetPair>& pairs, std::size_t budget) {
        std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
        for (const Batch& b : batch_by_language(pairs, budget)) out.emplace_back(b.language, b.members);
        return out;
      },
      py::arg("pairs"), py::arg("budget") = kDefaultTokenBudget);

  m.def(
      "precision_at_k",
      [](const std::vector<std::string>& ranking, const std::set<std::string>& relevant, std::size_t k) {
        return precision_at_k(ranked_ids(ranking), relevant, k);
      },
      py::arg("ranking"), py::arg("relevant"), py::arg("k"));
  m.def(
      "average_precision",
      [](const std::vector<std::string>& ranking, const std::set<std::string>& relevant) {
        return average_precision(ranked_ids(ranking), relevant);
      },
      py::arg("ranking"), py::arg("relevant"));
  m.def(
      "ndcg",
      [](const std::vector<std::string>& ranking, const std::set<std::string>& relevant) {
        return ndcg(ranked_ids(ranking), relevant);
      },
      py::arg("ranking"), py::arg("relevant"));
  m.def(
      "reciprocal_rank",
      [](const std::vector<std::string>& ranking, const std::set<std::string>& relevant) {
        return reciprocal_rank(ranked_ids(ranking), relevant);
      },
      py::arg("ranking"), py::arg("relevant"));

  m.def(
      "evaluate",
      [](const std::map<std::string, Embedding>& queries, const std::map<std::string, Embedding>& candidates,
         const std::map<std::string, std::set<std::string>>& relevant,
         const std::map<std::string, std::string>& original, std::size_t jobs) {
        RelevanceJudgments judgments{relevant, original};
        for (const auto& [q, target] : original) judgments.relevant[q].erase(target);
        return report_dict(evaluate(queries, candidates, judgments, jobs));
      },
      py::arg("queries"), py::arg("candidates"), py::arg("relevant"),
      py::arg("original") = std::map<std::string, std::string>{}, py::arg("jobs") = 1);

  m.def(
      "info_nce",
      [](const Embedding& q, const Embedding& pos, const std::vector<Embedding>& negs, double tau,
         bool negatives_only) {
        return info_nce(q, pos, negs, tau, negatives_only ? LossForm::NegativesOnly : LossForm::Standard);
      },
      py::arg("query"), py::arg("positive"), py::arg("negatives"), py::arg("tau") = kDefaultTemperature,
      py::arg("negatives_only") = false);

  py::class_<ToyEncoder>(m, "ToyEncoder")
      .def(py::init([](std::size_t buckets, std::size_t dimension, std::uint64_t seed, double tau) {
             ToyEncoderConfig c;
             c.buckets = buckets;
             c.dimension = dimension;
             c.seed = seed;
             c.tau = tau;
             return ToyEncoder(c);
           }),
           py::arg("buckets") = kDefaultBuckets, py::arg("dimension") = kDefaultDimension,
           py::arg("seed") = 0, py::arg("tau") = kDefaultTemperature)
      .def_static("load", [](const std::filesystem::path& path) { return load_checkpoint(path); })
      .def("save", [](const ToyEncoder& e, const std::filesystem::path& path) { save_checkpoint(path, e, "{}"); })
      .def("encode", &ToyEncoder::encode, py::arg("text"))
      .def("batch_loss",
           [](const ToyEncoder& e, const std::vector<TextPair>& batch) { return batch_loss(batch, e); })
      .def_property_readonly("dimension", [](const ToyEncoder& e) { return e.config().dimension; })
      .def_property_readonly("buckets", [](const ToyEncoder& e) { return e.config().buckets; });

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line tool; returns (exit code, stdout, stderr)");
}
