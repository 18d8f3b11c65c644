#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "figforge/corpus/asset.hpp"
#include "figforge/corpus/catalog.hpp"
#include "figforge/filters/verdict.hpp"
#include "figforge/k12/ocr.hpp"
#include "figforge/k12/problem.hpp"
#include "figforge/modelgate/gateway.hpp"

namespace figforge::k12 {

using AssetLookup = std::function<std::optional<corpus::ImageAsset>(const std::string& asset_id)>;
AssetLookup catalog_lookup(const corpus::Catalog& catalog);

struct ImagePartition {
  std::vector<corpus::ImageAsset> figures;
  std::vector<corpus::ImageAsset> equations;
};

/// Throws Error(MissingAsset) for an unresolvable reference.
ImagePartition partition_problem_images(const RawProblem& problem, const AssetLookup& lookup,
                                        const corpus::ClassifyConfig& cfg);

/// REJECT(EQUATION_ONLY) iff there is no figure.
filters::FilterVerdict admit_problem(const ImagePartition& partition);

/// Parses the three numbered sections of an augmentation response. Throws
/// Error(SchemaInvalid) naming what is missing.
ProcessedProblem parse_processed(const std::string& response, const std::string& problem_id);

/// Answer count matches sub-questions; multiple-choice answers are letters of
/// existing options; solution non-empty; answers are short single-line
/// phrases; at least one figure.
filters::FilterVerdict validate_processed(const ProcessedProblem& p);

struct AugmentOptions {
  std::string endpoint_id;
  double temperature = 0.0;
  std::uint32_t attempts = 2;  // first try plus one retry on an invalid response
};

/// Sends the problem through the augmentation template and validates the
/// result. Throws Error(SchemaInvalid) when every attempt is invalid;
/// Error(EndpointUnreachable) passes through.
ProcessedProblem augment(const RawProblem& problem, const std::vector<std::string>& figure_refs,
                         modelgate::ModelGateway& gateway, const AugmentOptions& opts);

struct ProblemOutcome {
  std::string problem_id;
  filters::FilterVerdict verdict;
  std::optional<ProcessedProblem> processed;
  std::size_t figures = 0;
  std::size_t equations = 0;
};

struct PipelineOptions {
  corpus::ClassifyConfig classify;
  AugmentOptions augment;
  std::size_t workers = 4;
};

/// partition -> admit -> OCR splice -> augment, one problem at a time.
/// Schema failures and unresolvable image references become
/// REJECT(SCHEMA_INVALID) verdicts; endpoint
/// failures propagate.
ProblemOutcome process_problem(const RawProblem& problem, const AssetLookup& lookup, OcrClient& ocr,
                               modelgate::ModelGateway& gateway, const PipelineOptions& opts);

/// Parallel over problems; results are in input order.
std::vector<ProblemOutcome> process_problems(const std::vector<RawProblem>& problems, const AssetLookup& lookup,
                                             OcrClient& ocr, modelgate::ModelGateway& gateway,
                                             const PipelineOptions& opts);

}  // namespace figforge::k12
