#pragma once

#include <filesystem>
#include <vector>

#include "figforge/corpus/catalog.hpp"

namespace figforge::corpus {

struct IngestOptions {
  ClassifyConfig classify;
  std::size_t workers = 4;
};

struct IngestReport {
  std::vector<ImageAsset> added;     // new digests appended to the catalog
  std::vector<SkipRecord> skipped;   // undecodable files seen in this run
  std::size_t already_present = 0;   // decodable, but digest already cataloged
};

/// True for the container extensions the ingester looks at (.png, .jpg, .jpeg).
bool is_image_path(const std::filesystem::path& p);

/// Walks root recursively in lexicographic path order. Decoding and digesting
/// fan out to opts.workers threads; catalog appends happen in path order on the
/// calling thread. Throws Error(RootNotFound) if root is not a directory.
IngestReport ingest(const std::filesystem::path& root, SourceTag source, Catalog& catalog,
                    const IngestOptions& opts = {});

}  // namespace figforge::corpus
