/* Copyright 2026 The POITWR Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "poitwr/commands.h"

#include <cstdio>
#include <fstream>

#include "poitwr/checkpoint.h"
#include "poitwr/config.h"
#include "poitwr/corpus.h"
#include "poitwr/evaluation.h"
#include "poitwr/features.h"
#include "poitwr/model.h"
#include "poitwr/training.h"

namespace poi {

namespace {

// Runs `body`, mapping every known failure to a one-line diagnostic and the
// input-error exit code.
template <typename Body>
int guarded(const char* command, std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const CorpusError& e) {
    err << command << ": " << to_string(e.code()) << ": " << e.what() << '\n';
  } catch (const CheckpointError& e) {
    const char* kind = e.code() == CheckpointErrc::kVersionMismatch ? "VersionMismatch"
                       : e.code() == CheckpointErrc::kCorruptFile   ? "CorruptFile"
                                                                     : "IoFailure";
    err << command << ": " << kind << ": " << e.what() << '\n';
  } catch (const ConfigError& e) {
    err << command << ": config error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << command << ": " << e.what() << '\n';
  }
  return kExitInputError;
}

}  // namespace

int cmd_ingest(const IngestOptions& options, std::ostream& out, std::ostream& err) {
  return guarded("ingest", err, [&] {
    const auto policy = options.skip_malformed ? MalformedPolicy::kSkip : MalformedPolicy::kFailFast;
    const auto loaded = load_corpus_file(options.input, policy);
    if (!options.out.empty()) {
      std::ofstream file(options.out, std::ios::binary | std::ios::trunc);
      if (!file) throw CorpusError(CorpusErrc::kIoFailure, "cannot write " + options.out);
      write_corpus(file, loaded.corpus);
      if (!file) throw CorpusError(CorpusErrc::kIoFailure, "write failed for " + options.out);
    }
    out << format_stats(corpus_stats(loaded.corpus));
    out << "skipped: " << loaded.skipped << '\n';
    return kExitOk;
  });
}

int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err) {
  return guarded("train", err, [&] {
    RunConfig config = options.config.empty() ? RunConfig{} : load_run_config(options.config);
    if (options.rating_weight) config.train.weights.rating = *options.rating_weight;
    if (options.retrieval_weight) config.train.weights.retrieval = *options.retrieval_weight;
    if (options.two_phase) config.train.schedule = Schedule::kTwoPhase;
    config.corpus = options.corpus;
    config.validate();

    const auto corpus = load_corpus_file(options.corpus).corpus;
    const auto split = temporal_split(corpus, config.split_ratio);
    const auto space = build_feature_space(corpus, split.train, config.features);
    const auto examples = encode_examples(corpus, split.train, space, config.label_scale);
    const auto result = run_schedule(examples, space, config.train, [&](const EpochLoss& loss) {
      out << format_epoch_line(loss) << '\n';
    });
    save_checkpoint(Checkpoint{config, space, result.params}, options.out);
    out << "steps: " << result.steps << '\n' << "checkpoint: " << options.out << '\n';
    return kExitOk;
  });
}

int cmd_evaluate(const EvaluateOptions& options, std::ostream& out, std::ostream& err) {
  return guarded("evaluate", err, [&] {
    const auto ck = load_checkpoint(options.checkpoint);
    const auto corpus = load_corpus_file(options.corpus).corpus;
    const auto split = temporal_split(corpus, ck.config.split_ratio);
    const auto ks = options.ks.empty() ? ck.config.eval_k : options.ks;
    auto report =
        evaluate(ck.params, corpus, split, ck.space, ks, ck.config.eval_options(options.mnb));
    report.config_echo = config_entries(ck.config);

    const std::string text = serialize_report(report);
    std::ofstream file(options.report, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("IoFailure: cannot write " + options.report);
    file << text;
    if (!file) throw std::runtime_error("IoFailure: write failed for " + options.report);

    out << "rmse: " << format_number(report.rmse) << '\n';
    for (const auto& [k, acc] : report.top_k) {
      out << "top_k." << k << ": " << format_number(acc) << '\n';
    }
    if (report.confusion) out << format_confusion_table(*report.confusion);
    return kExitOk;
  });
}

int cmd_recommend(const RecommendOptions& options, std::ostream& out, std::ostream& err) {
  return guarded("recommend", err, [&] {
    if (options.k < 1) throw std::invalid_argument("--k must be >= 1");
    const auto ck = load_checkpoint(options.checkpoint);
    QueryFeatures query;
    query.user_index = ck.space.vocab.users.lookup(options.user_id);
    // Serving time is the end of the training window.
    if (ck.space.config.use_date) {
      query.date = encode_date(ck.space.date_max, ck.space.date_min, ck.space.date_max);
    }
    const auto candidates = ck.space.corpus_candidates();
    const auto scores = score_all(query, candidates, ck.params);
    const auto best = top_k(scores, static_cast<size_t>(options.k));
    for (size_t r = 0; r < best.size(); ++r) {
      const auto& business = ck.space.vocab.businesses.id(candidates[best[r]].business_index);
      out << r + 1 << ", " << business << ", " << format_number(scores[best[r]]) << '\n';
    }
    return kExitOk;
  });
}

int cmd_gradcheck(const GradcheckOptions& options, std::ostream& out, std::ostream& err) {
  GradcheckResult result;
  try {
    result = run_gradcheck(options.seed, options.corrupt_tensor);
  } catch (const std::exception& e) {
    err << "gradcheck: " << e.what() << '\n';
    return kExitInputError;
  }
  char line[96];
  std::snprintf(line, sizeof(line), "%.6e", result.max_relative_error);
  out << "max_relative_error: " << line << '\n'
      << "checked: " << result.checked << '\n'
      << "skipped_kinks: " << result.skipped_kinks << '\n';
  if (!result.passed) {
    err << "gradcheck: FAILED in tensor " << result.worst_tensor << '\n';
    return kExitVerificationFailure;
  }
  out << "gradcheck: PASSED\n";
  return kExitOk;
}

}  // namespace poi
