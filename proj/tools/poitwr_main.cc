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

#include <iostream>

#include "CLI11.hpp"
#include "poitwr/commands.h"

int main(int argc, char** argv) {
  CLI::App app{"Two-tower multi-task point-of-interest recommender"};
  app.require_subcommand(1);

  poi::IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate review logs and print corpus stats");
  ingest_cmd->add_option("--input", ingest.input, "Newline-delimited JSON reviews")->required();
  ingest_cmd->add_option("--out", ingest.out, "Compact corpus file to write");
  ingest_cmd->add_flag("--skip-malformed", ingest.skip_malformed,
                       "Skip and count bad lines instead of failing");

  poi::TrainOptions train;
  double rating_weight = 0.0, retrieval_weight = 0.0;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_cmd->add_option("--corpus", train.corpus, "Corpus file")->required();
  train_cmd->add_option("--config", train.config, "Run configuration (key = value lines)");
  train_cmd->add_option("--out", train.out, "Checkpoint path")->required();
  auto* rw = train_cmd->add_option("--rating-weight", rating_weight, "Rating loss weight w");
  auto* tw = train_cmd->add_option("--retrieval-weight", retrieval_weight,
                                   "Retrieval loss weight w'");
  train_cmd->add_flag("--two-phase", train.two_phase,
                      "Rating pretraining, then retrieval fine-tuning of the heads");

  poi::EvaluateOptions eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Compute RMSE and top-K accuracy");
  eval_cmd->add_option("--checkpoint", eval.checkpoint)->required();
  eval_cmd->add_option("--corpus", eval.corpus)->required();
  eval_cmd->add_option("--k", eval.ks, "Top-K cutoff, may repeat");
  eval_cmd->add_flag("--mnb", eval.mnb, "Run the naive Bayes star-from-text experiment");
  eval_cmd->add_option("--report", eval.report)->required();

  poi::RecommendOptions rec;
  auto* rec_cmd = app.add_subcommand("recommend", "Top-K businesses for one user");
  rec_cmd->add_option("--checkpoint", rec.checkpoint)->required();
  rec_cmd->add_option("--user-id", rec.user_id)->required();
  rec_cmd->add_option("--k", rec.k)->required();

  poi::GradcheckOptions grad;
  std::string corrupt;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  grad_cmd->add_option("--seed", grad.seed);
  auto* corrupt_opt = grad_cmd->add_option("--corrupt-gradient", corrupt)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : poi::kExitInputError;
  }

  if (*ingest_cmd) return poi::cmd_ingest(ingest, std::cout, std::cerr);
  if (*train_cmd) {
    if (*rw) train.rating_weight = rating_weight;
    if (*tw) train.retrieval_weight = retrieval_weight;
    return poi::cmd_train(train, std::cout, std::cerr);
  }
  if (*eval_cmd) return poi::cmd_evaluate(eval, std::cout, std::cerr);
  if (*rec_cmd) return poi::cmd_recommend(rec, std::cout, std::cerr);
  if (*grad_cmd) {
    if (*corrupt_opt) grad.corrupt_tensor = corrupt;
    return poi::cmd_gradcheck(grad, std::cout, std::cerr);
  }
  return poi::kExitInputError;
}
